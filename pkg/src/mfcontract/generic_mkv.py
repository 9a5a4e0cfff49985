"""Model-agnostic McKean-Vlasov engine for :class:`GenericModel` instances.

No closed forms: at every step the agent's control is a zooming grid
argmax of the Hamiltonian, jump counts per mark use the instantaneous
(possibly state-dependent) intensity, and the law moments come from an
outer Picard loop on empirical snapshot moments. It shares the random
stream layout of the specialised simulator, so on the demand-response
instance both engines see the same Gaussian and first-mark uniform draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteState, PicardNoConvergence
from .hamiltonian import IncentiveSlice, h_integrand, refine_best_response, refine_best_response_batch
from .incentives import IncentivePolicy
from .model import GenericModel, LawMoments, MarketParams, example_model
from .moments import MomentFlow
from .rng import blocks, draw_block, poisson_inverse
from .simulator import PathEnsemble, SimConfig, empirical_flow, snapshot_steps


@dataclass(frozen=True)
class GenericRun:
    model: GenericModel
    incentive: IncentivePolicy
    gamma: float
    sim: SimConfig
    horizon: float = 1.0
    m0: float = 0.0
    v0: float = 0.0
    bounds: tuple = ((-5.0, 5.0), (-10.0, 10.0))
    grid_points: int = 41
    levels: int = 6

    def __post_init__(self):
        if self.gamma <= 0 or self.horizon <= 0 or self.v0 < 0:
            raise ValueError("gamma and horizon must be > 0 and v0 >= 0")
        (lo0, hi0), (lo1, hi1) = self.bounds
        if not (lo0 <= hi0 and lo1 <= hi1) or self.grid_points < 1 or self.levels < 1:
            raise ValueError("control grid is empty")


@dataclass
class GenericResult:
    ensemble: PathEnsemble
    flow: MomentFlow
    iterations: int
    gap: float
    history: list = field(default_factory=list)


def _slice(run: GenericRun, t: float) -> IncentiveSlice:
    pol = run.incentive
    return IncentiveSlice(float(pol.z_of_t(t)), {mk: float(pol.u_of_t(t, mk)) for mk in run.model.marks})


def _state_free_controls(run: GenericRun, flow: MomentFlow, tm: np.ndarray):
    ctrl = np.empty((len(tm), 2))
    for s, t in enumerate(tm):
        m, v = flow.at(t)
        law = LawMoments(float(m), float(v))
        ctrl[s] = refine_best_response(t, law.mean, _slice(run, t), law, run.model, run.gamma,
                                       run.bounds, n=run.grid_points, levels=run.levels)
    return ctrl


def _simulate_block(run: GenericRun, flow: MomentFlow, ctrl, b: int, start: int, stop: int, snaps):
    model, cfg = run.model, run.sim
    n, n_steps = stop - start, cfg.n_steps
    dt = run.horizon / n_steps
    sq = math.sqrt(dt)
    z0, g, us = draw_block(cfg.seed, b, n, n_steps, len(model.marks), cfg.antithetic)
    x = run.m0 + math.sqrt(run.v0) * z0 if run.v0 > 0 else np.full(n, float(run.m0))
    y = np.full(n, float(run.incentive.y0))
    cost = np.zeros(n)
    reward = np.zeros(n)
    jumps = np.zeros(n, dtype=np.int64)
    xs = np.empty((n, len(snaps)))
    ys = np.empty((n, len(snaps)))
    k = 0
    if snaps[0] == 0:
        xs[:, 0], ys[:, 0], k = x, y, 1
    for s in range(n_steps):
        t = (s + 0.5) * dt
        m, v = flow.at(t)
        law = LawMoments(float(m), float(v))
        sl = _slice(run, t)
        if ctrl is not None:
            a = (np.full(n, ctrl[s, 0]), np.full(n, ctrl[s, 1]))
        else:
            a = refine_best_response_batch(t, x, sl, law, model, run.gamma, run.bounds,
                                           n=min(run.grid_points, 21), levels=run.levels)
        H = h_integrand(t, x, sl, law, a, model, run.gamma)
        drift = np.broadcast_to(model.drift(t, x, law, a), x.shape)
        vol = np.broadcast_to(model.vol(t, x), x.shape)
        c0 = np.broadcast_to(model.run_cost(t, x, law, a), x.shape)
        dw = sq * g[:, s]
        xn = x + drift * dt + vol * dw
        dy = sl.z * vol * dw + sl.z * drift * dt - H * dt
        for j, (mark, rate) in enumerate(zip(model.marks, model.base_rates)):
            if rate == 0:
                continue
            tilt = np.broadcast_to(model.intensity_tilt(t, x, mark, law, a), x.shape)
            cnt = poisson_inverse(us[j][:, s], tilt * rate * dt)
            dn = cnt.astype(float)
            c1 = np.broadcast_to(model.jump_reward(t, x, mark, law, a), x.shape)
            xn = xn + mark * dn
            dy = dy + sl.u_at(mark) * dn
            reward = reward + c1 * dn
            jumps += cnt
        y = y + dy
        cost = cost + c0 * dt
        x = xn
        bad = ~(np.isfinite(x) & np.isfinite(y))
        if bad.any():
            raise NonFiniteState(s, start + int(np.argmax(bad)))
        if k < len(snaps) and snaps[k] == s + 1:
            xs[:, k], ys[:, k], k = x, y - cost + reward, k + 1
    return x, y, jumps, cost, reward, xs, ys


def simulate_generic_once(run: GenericRun, flow: MomentFlow) -> PathEnsemble:
    """One pass of the engine with the law moments frozen at ``flow``."""
    cfg = run.sim
    snaps = snapshot_steps(cfg.n_steps)
    dt = run.horizon / cfg.n_steps
    ctrl = None
    if not run.model.control_depends_on_state:
        ctrl = _state_free_controls(run, flow, (np.arange(cfg.n_steps) + 0.5) * dt)
    parts = [_simulate_block(run, flow, ctrl, b, start, stop, snaps) for b, start, stop in blocks(cfg.n_paths)]
    x, y, jumps, cost, reward, xs, ys = (np.concatenate([pt[i] for pt in parts]) for i in range(7))
    return PathEnsemble(
        x_terminal=x, y_terminal=y, jump_count=jumps, cost_integral=cost, reward_sum=reward,
        g_integral=np.zeros_like(x), x_snapshots=xs, ybar_snapshots=ys,
        snapshot_times=snaps * dt, y0=float(run.incentive.y0), horizon=run.horizon, n_steps=cfg.n_steps,
    )


def simulate_generic(run: GenericRun, initial: MomentFlow | None = None, tol: float | None = None) -> GenericResult:
    """Picard loop on empirical moments; same contract as ``picard_meanfield``."""
    cfg = run.sim
    tol = cfg.picard_tol if tol is None else float(tol)
    cand = MomentFlow.flat(run.horizon, run.m0, run.v0) if initial is None else initial
    history = []
    gap = math.inf
    for it in range(1, cfg.picard_max_iters + 1):
        ens = simulate_generic_once(run, cand)
        new = empirical_flow(ens)
        old_m, old_v = cand.at(new.grid)
        gap = float(max(np.max(np.abs(new.m - old_m)), np.max(np.abs(new.v - old_v))))
        history.append(gap)
        cand = new
        if gap < tol:
            return GenericResult(ens, new, it, gap, history)
    raise PicardNoConvergence(gap, cfg.picard_max_iters)


def benchmark_model(name: str, p: MarketParams, rate: float = 1.0) -> GenericModel:
    """Built-in models: ``example`` (demand response), ``poisson`` (unit tilt,
    no jump reward, constant base rate ``rate``) and ``diffusion`` (no jumps)."""
    if name == "example":
        return example_model(p)
    if name not in ("poisson", "diffusion"):
        raise ValueError(f"unknown benchmark model {name!r}")
    k1, sigma = p.k1, p.sigma
    return GenericModel(
        drift=lambda t, x, law, a: a[0] + k1 * law.mean,
        vol=lambda t, x: sigma,
        run_cost=lambda t, x, law, a: 0.5 * np.square(a[0]),
        jump_reward=lambda t, x, mark, law, a: np.zeros_like(np.asarray(a[1], dtype=float)),
        intensity_tilt=lambda t, x, mark, law, a: np.ones_like(np.asarray(a[1], dtype=float)),
        marks=(-1.0,),
        base_rates=(rate if name == "poisson" else 0.0,),
        control_depends_on_state=False,
    )
