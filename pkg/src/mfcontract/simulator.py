"""Monte Carlo simulation of the output process and the contract under the optimal measure.

Per step of length ``dt`` with ``G ~ N(0, 1)`` and ``dN`` a Poisson count:

    dX = (alpha0 + k1 m) dt + sigma sqrt(dt) G - dN
    dY = Z sigma sqrt(dt) G + Z b dt + U(-1) dN - H dt

The accident intensity ``exp(-k2 alpha1) v(t)`` depends on the law, not the
path, so counts are exact Poisson draws. All deterministic coefficients are
taken at the step midpoint; running integrals of ``f`` and ``g`` use the
trapezoid in ``X``. The contract term ``H`` always uses the principal's
``(Z, U)`` and the supplied law flow, whatever the agent does.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NonFiniteState, PicardNoConvergence
from .hamiltonian import H_hat, IncentiveSlice
from .incentives import AgentPolicy, IncentivePolicy
from .model import LawMoments, MarketParams
from .moments import MomentFlow
from .rng import blocks, draw_block, poisson_cdf_tables

log = logging.getLogger(__name__)

N_SNAPSHOTS = 21


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    n_steps: int = 200
    seed: int = 42
    picard_tol: float = 0.02
    picard_max_iters: int = 10
    antithetic: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be positive")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be > 0")
        if self.picard_max_iters < 1:
            raise ValueError("picard_max_iters must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class PathEnsemble:
    x_terminal: np.ndarray
    y_terminal: np.ndarray
    jump_count: np.ndarray
    cost_integral: np.ndarray
    reward_sum: np.ndarray
    g_integral: np.ndarray
    x_snapshots: np.ndarray
    ybar_snapshots: np.ndarray  # Y - int c0 + sum c1 at the snapshot times
    snapshot_times: np.ndarray
    y0: float
    horizon: float
    n_steps: int
    expected_jumps: float = field(default=float("nan"))  # per path, from the intensity schedule

    @property
    def n_paths(self) -> int:
        return self.x_terminal.shape[0]

    @property
    def ybar_terminal(self) -> np.ndarray:
        return self.y_terminal - self.cost_integral + self.reward_sum

    def snapshot_moments(self):
        """Empirical mean and (unbiased) variance of ``X`` at each snapshot time."""
        xs = self.x_snapshots
        if xs.shape[0] < 2:
            return xs.mean(axis=0), np.zeros(xs.shape[1])
        return xs.mean(axis=0), xs.var(axis=0, ddof=1)


def snapshot_steps(n_steps: int, n_snapshots: int = N_SNAPSHOTS) -> np.ndarray:
    return np.unique(np.rint(np.linspace(0, n_steps, n_snapshots)).astype(np.int64))


@dataclass(frozen=True)
class StepSchedule:
    """Deterministic per-step coefficients fed to the path kernel."""

    dt: float
    bdt: np.ndarray
    zsig: np.ndarray
    zb: np.ndarray
    uj: np.ndarray
    hdt: np.ndarray
    c0dt: np.ndarray
    a1: np.ndarray
    intensity: np.ndarray
    tables: np.ndarray


def build_schedule(p: MarketParams, pol: IncentivePolicy, agent: AgentPolicy, flow: MomentFlow,
                   n_steps: int) -> StepSchedule:
    dt = p.horizon / n_steps
    tm = (np.arange(n_steps) + 0.5) * dt
    z = np.broadcast_to(np.asarray(pol.z_of_t(tm), dtype=float), tm.shape)
    u = np.broadcast_to(np.asarray(pol.u_of_t(tm, -1.0), dtype=float), tm.shape)
    a0 = np.broadcast_to(np.asarray(agent.a0_of_t(tm), dtype=float), tm.shape)
    a1 = np.broadcast_to(np.asarray(agent.a1_of_t(tm), dtype=float), tm.shape)
    m, v = flow.at(tm)
    b = a0 + p.k1 * m
    intensity = np.exp(-p.k2 * a1) * v
    # H without its f(t, X) part, which the kernel adds from the path; H_hat at x = 0 is exactly that
    h_det = H_hat(tm, 0.0, IncentiveSlice(z, {-1.0: u}), LawMoments(m, v), p)
    return StepSchedule(
        dt=dt,
        bdt=np.ascontiguousarray(b * dt),
        zsig=np.ascontiguousarray(z * p.sigma * math.sqrt(dt)),
        zb=np.ascontiguousarray(z * b * dt),
        uj=np.ascontiguousarray(u, dtype=float),
        hdt=np.ascontiguousarray(h_det * dt),
        c0dt=np.ascontiguousarray(0.5 * a0 * a0 * dt),
        a1=np.ascontiguousarray(a1, dtype=float),
        intensity=intensity,
        tables=poisson_cdf_tables(intensity * dt),
    )


def _run_block(args):
    p, y0, sched, cfg, snaps, b, start, stop, backend = args
    n = stop - start
    z0, g, (u,) = draw_block(cfg.seed, b, n, cfg.n_steps, 1, cfg.antithetic)
    x0 = p.m0 + math.sqrt(p.v0) * z0 if p.v0 > 0 else np.full(n, float(p.m0))
    try:
        return kernels.simulate_block(
            g, u, x0, float(y0), sched.tables, sched.bdt, sched.zsig, sched.zb, sched.uj,
            sched.hdt, sched.c0dt, sched.a1, p.sigma * math.sqrt(sched.dt), sched.dt,
            float(p.f_intercept), float(p.f_slope), float(p.g_intercept), float(p.g_slope),
            snaps, backend=backend,
        )
    except NonFiniteState as exc:
        raise NonFiniteState(exc.step, exc.path + start) from None


def run_schedule(p: MarketParams, y0: float, sched: StepSchedule, cfg: SimConfig,
                 backend: str | None = None) -> PathEnsemble:
    snaps = snapshot_steps(cfg.n_steps)
    jobs = [(p, y0, sched, cfg, snaps, b, start, stop, backend) for b, start, stop in blocks(cfg.n_paths)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(j) for j in jobs]
    cols = [np.concatenate([part[i] for part in parts]) for i in range(8)]
    return PathEnsemble(
        x_terminal=cols[0],
        y_terminal=cols[1],
        jump_count=cols[2],
        cost_integral=cols[3],
        reward_sum=cols[4],
        g_integral=cols[5],
        x_snapshots=cols[6],
        ybar_snapshots=cols[7],
        snapshot_times=snaps * sched.dt,
        y0=float(y0),
        horizon=p.horizon,
        n_steps=cfg.n_steps,
        expected_jumps=float(np.sum(sched.intensity) * sched.dt),
    )


def simulate_deviation(p: MarketParams, coeffs, pol: IncentivePolicy, deviated: AgentPolicy,
                       flow: MomentFlow, cfg: SimConfig, backend: str | None = None) -> PathEnsemble:
    """Paths of an agent playing ``deviated`` against the fixed contract and frozen law flow."""
    sched = build_schedule(p, pol, deviated, flow, cfg.n_steps)
    return run_schedule(p, pol.y0, sched, cfg, backend)


def simulate_equilibrium(p: MarketParams, coeffs, pol: IncentivePolicy, agent: AgentPolicy,
                         flow: MomentFlow, cfg: SimConfig, backend: str | None = None) -> PathEnsemble:
    return simulate_deviation(p, coeffs, pol, agent, flow, cfg, backend)


@dataclass
class PicardResult:
    flow: MomentFlow
    iterations: int
    gap: float
    ensemble: PathEnsemble
    history: list = field(default_factory=list)


def empirical_flow(ens: PathEnsemble) -> MomentFlow:
    m, v = ens.snapshot_moments()
    return MomentFlow(ens.snapshot_times.copy(), m, v)


def picard_meanfield(p: MarketParams, coeffs, pol: IncentivePolicy, agent: AgentPolicy, cfg: SimConfig,
                     initial: MomentFlow | None = None, tol: float | None = None) -> PicardResult:
    """Fixed point of "simulate with candidate moments, replace them by the empirical ones".

    Every iteration reuses the same random draws, so the gap measures the
    fixed-point map rather than Monte Carlo noise. ``tol`` overrides
    ``cfg.picard_tol`` (a zero tolerance can never be met).
    """
    tol = cfg.picard_tol if tol is None else float(tol)
    cand = MomentFlow.flat(p.horizon, p.m0, p.v0) if initial is None else initial
    history = []
    gap = math.inf
    for it in range(1, cfg.picard_max_iters + 1):
        ens = simulate_equilibrium(p, coeffs, pol, agent, cand, cfg)
        new = empirical_flow(ens)
        old_m, old_v = cand.at(new.grid)
        gap = float(max(np.max(np.abs(new.m - old_m)), np.max(np.abs(new.v - old_v))))
        history.append(gap)
        log.debug("picard iteration %d: gap %.3g", it, gap)
        cand = new
        if gap < tol:
            return PicardResult(new, it, gap, ens, history)
    raise PicardNoConvergence(gap, cfg.picard_max_iters)
