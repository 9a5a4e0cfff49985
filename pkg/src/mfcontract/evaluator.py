"""Agent and principal values from simulated ensembles, and incentive checks.

For any admissible contract ``(Y0, Z, U)`` the process ``exp(-gamma Ybar)``,
with ``Ybar = Y - int c0 + sum c1``, has drift ``gamma (H - h(alpha))`` times
itself: a martingale when the agent best-responds and a submartingale
otherwise. The checks here test exactly that, by Monte Carlo.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .incentives import AgentPolicy, IncentivePolicy
from .model import MarketParams
from .moments import MomentFlow
from .simulator import PathEnsemble, SimConfig, simulate_deviation

THRESHOLD = 3.0

DEFAULT_DEVIATIONS = (
    (0.25, 0.0), (-0.25, 0.0), (0.5, 0.0), (-0.5, 0.0),
    (0.0, 0.25), (0.0, -0.25), (0.0, 0.5), (0.0, -0.5),
    (0.25, 0.25), (0.25, -0.25), (-0.25, 0.25), (-0.25, -0.25),
)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n: int

    @classmethod
    def from_samples(cls, x) -> "MCEstimate":
        x = np.asarray(x, dtype=float)
        n = x.size
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(x.mean()), se, n)

    def within(self, target: float, k: float = THRESHOLD) -> bool:
        return abs(self.mean - target) <= k * self.std_error

    def __str__(self):
        return f"{self.mean:.6g} +/- {self.std_error:.2g} (n={self.n})"


def utility_samples(ens: PathEnsemble, p: MarketParams) -> np.ndarray:
    return -np.exp(-p.gamma * ens.ybar_terminal)


def agent_value(ens: PathEnsemble, p: MarketParams) -> MCEstimate:
    return MCEstimate.from_samples(utility_samples(ens, p))


def principal_samples(ens: PathEnsemble, p: MarketParams) -> np.ndarray:
    """Per-path influence values whose mean is the principal-value estimate.

    The variance penalty uses the sample variance of ``X_T``; its influence
    ``(X - mean)^2`` carries the delta-method contribution to the error.
    """
    x = ens.x_terminal
    dev = x - x.mean()
    n = x.size
    scale = n / (n - 1) if n > 1 else 1.0
    return p.beta * x - ens.y_terminal - ens.g_integral - 0.5 * p.theta * scale * dev * dev


def principal_value(ens: PathEnsemble, p: MarketParams) -> MCEstimate:
    """``beta E[X_T] - E[xi] - E[int g] - theta/2 Var(X_T)`` with a delta-method error."""
    return MCEstimate.from_samples(principal_samples(ens, p))


def predicted_principal_value(coeffs, p: MarketParams, y0: float) -> float:
    return float(coeffs.h0_at(0.0) + coeffs.h1_at(0.0) * p.m0 + coeffs.h2_at(0.0) * p.v0 - y0)


@dataclass(frozen=True)
class Deviation:
    eps0: float
    eps1: float
    value: MCEstimate
    gap: float  # deviation value minus equilibrium value
    gap_se: float  # paired standard error (common random numbers)
    passed: bool

    @property
    def label(self) -> str:
        return f"alpha0{self.eps0:+g},alpha1{self.eps1:+g}"


@dataclass
class ICReport:
    optimal_value: MCEstimate
    deviations: list = field(default_factory=list)
    reservation: float = float("nan")  # -exp(-gamma Y0)
    envelope_passed: bool = True
    threshold: float = THRESHOLD

    @property
    def passed(self) -> bool:
        return self.envelope_passed and all(d.passed for d in self.deviations)


def ic_verify(p: MarketParams, coeffs, pol: IncentivePolicy, agent: AgentPolicy, flow: MomentFlow,
              cfg: SimConfig, deviations=DEFAULT_DEVIATIONS, threshold: float = THRESHOLD,
              equilibrium: PathEnsemble | None = None) -> ICReport:
    """Compare the recommended policy against constant-shift deviations.

    All ensembles share random numbers. A deviation passes when its value
    does not exceed the recommended one by more than ``threshold`` paired
    standard errors. The recommended value must also sit on the envelope
    ``-exp(-gamma Y0)`` within ``threshold`` standard errors.
    """
    deviations = list(deviations)
    if not deviations:
        raise ValueError("deviation grid is empty")
    if equilibrium is None:
        equilibrium = simulate_deviation(p, coeffs, pol, agent, flow, cfg)
    base = utility_samples(equilibrium, p)
    opt = MCEstimate.from_samples(base)
    envelope = -math.exp(-p.gamma * pol.y0)
    report = ICReport(opt, reservation=envelope, threshold=threshold,
                      envelope_passed=opt.within(envelope, threshold))
    for eps0, eps1 in deviations:
        if eps0 == 0.0 and eps1 == 0.0:
            dev_samples = base
        else:
            ens = simulate_deviation(p, coeffs, pol, agent.shifted(eps0, eps1), flow, cfg)
            dev_samples = utility_samples(ens, p)
        diff = MCEstimate.from_samples(dev_samples - base)
        report.deviations.append(Deviation(
            float(eps0), float(eps1), MCEstimate.from_samples(dev_samples), diff.mean, diff.std_error,
            diff.mean <= threshold * diff.std_error,
        ))
    return report


@dataclass(frozen=True)
class MartingaleDiagnostic:
    times: np.ndarray  # interval start times
    increments: np.ndarray  # E[exp(-gamma Ybar_{t+})] - E[exp(-gamma Ybar_t)]
    std_errors: np.ndarray
    submartingale: bool
    martingale: bool

    def verdict(self, equilibrium: bool) -> bool:
        return self.martingale if equilibrium else self.submartingale


def martingale_check(ens: PathEnsemble, p: MarketParams, threshold: float = THRESHOLD) -> MartingaleDiagnostic:
    """Snapshot increments of ``E[exp(-gamma Ybar)]`` with paired standard errors."""
    e = np.exp(-p.gamma * ens.ybar_snapshots)
    inc = np.diff(e, axis=1)
    n = inc.shape[0]
    mean = inc.mean(axis=0)
    se = inc.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(inc.shape[1])
    # rounding floor, so that noiseless paths are not judged on the last bit
    band = threshold * se + 1e-12 * np.maximum(1.0, np.abs(e[:, :-1]).mean(axis=0))
    return MartingaleDiagnostic(
        times=ens.snapshot_times[:-1].copy(),
        increments=mean,
        std_errors=se,
        submartingale=bool(np.all(mean >= -band)),
        martingale=bool(np.all(np.abs(mean) <= band)),
    )


def moment_comparison(ens: PathEnsemble, flow: MomentFlow, bias_floor: float = 1e-5):
    """Empirical snapshot moments against the ODE flow.

    Returns a structured array with one row per snapshot; ``z_m`` and ``z_v``
    are the discrepancies in standard errors. Where the standard error is
    at rounding level (noiseless paths) a gap below ``bias_floor``, the size
    of the Euler scheme's time-discretisation error, counts as agreement.
    """
    xs = ens.x_snapshots
    n = xs.shape[0]
    m, v = ens.snapshot_moments()
    fm, fv = flow.at(ens.snapshot_times)
    se_m = np.sqrt(v / n)
    se_v = np.std((xs - m) ** 2, axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(m)

    def zscore(d, se, ref):
        noisy = se > 1e-12 * (1.0 + np.abs(ref))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(noisy, d / se, np.where(np.abs(d) <= bias_floor, 0.0, np.inf))

    rows = np.zeros(len(m), dtype=[("t", float), ("m_mc", float), ("m_se", float), ("m_ode", float),
                                   ("v_mc", float), ("v_se", float), ("v_ode", float),
                                   ("z_m", float), ("z_v", float)])
    rows["t"] = ens.snapshot_times
    rows["m_mc"], rows["m_se"], rows["m_ode"] = m, se_m, fm
    rows["v_mc"], rows["v_se"], rows["v_ode"] = v, se_v, fv
    rows["z_m"] = zscore(m - fm, se_m, fm)
    rows["z_v"] = zscore(v - fv, se_v, fv)
    return rows
