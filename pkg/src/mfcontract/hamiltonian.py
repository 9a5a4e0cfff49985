"""Agent Hamiltonian, its supremum and the agent's best response.

For contract exposures ``(z, u)`` the agent's pointwise payoff rate is

    h = sum_marks (1 - exp(-gamma (u + c1))) / gamma * K * rate
        + b z - gamma sigma^2 z^2 / 2 - c0

and ``H = sup_a h``. The demand-response instance has the maximiser in
closed form; any :class:`GenericModel` can be maximised on a control grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .errors import EmptyGrid, NonFiniteValue
from .model import GenericModel, LawMoments, MarketParams


class ControlPoint(NamedTuple):
    alpha0: float
    alpha1: float


@dataclass(frozen=True)
class IncentiveSlice:
    """Contract exposures at one instant: ``z`` to the diffusion, ``u[mark]`` to jumps."""

    z: float
    u: Mapping[float, float] = field(default_factory=lambda: {-1.0: 0.0})

    def u_at(self, mark: float) -> float:
        try:
            return self.u[mark]
        except KeyError:
            raise KeyError(f"incentive slice has no jump exposure for mark {mark}") from None


def h_integrand(t, x, s: IncentiveSlice, law: LawMoments, a, model: GenericModel, gamma: float, check=True):
    """Evaluate ``h`` at control ``a = (alpha0, alpha1)``; broadcasts over array inputs."""
    a = (np.asarray(a[0], dtype=float), np.asarray(a[1], dtype=float))
    sig = model.vol(t, x)
    out = model.drift(t, x, law, a) * s.z - 0.5 * gamma * np.square(sig) * s.z**2
    out = out - model.run_cost(t, x, law, a)
    for mark, rate in zip(model.marks, model.base_rates):
        if rate == 0:
            continue
        c1 = model.jump_reward(t, x, mark, law, a)
        tilt = model.intensity_tilt(t, x, mark, law, a)
        out = out + (-np.expm1(-gamma * (s.u_at(mark) + c1))) / gamma * tilt * rate
    if check and not np.all(np.isfinite(out)):
        raise NonFiniteValue("h_integrand")
    return out


def jump_rate_constant(p: MarketParams) -> float:
    """``((gamma + k2) / k2) ** (-k2 / gamma)``, the tilt left at the optimal mitigation effort."""
    return ((p.gamma + p.k2) / p.k2) ** (-p.k2 / p.gamma)


def optimal_mitigation_shift(p: MarketParams) -> float:
    """``log(1 + gamma / k2) / gamma``; the optimal ``alpha1`` is this minus ``u(-1)``."""
    return math.log1p(p.gamma / p.k2) / p.gamma


def best_response_closed(s: IncentiveSlice, p: MarketParams) -> ControlPoint:
    return ControlPoint(s.z, optimal_mitigation_shift(p) - s.u_at(-1.0))


def H_hat(t, x, s: IncentiveSlice, law: LawMoments, p: MarketParams):
    """Principal-shifted supremum ``H - g`` of the demand-response instance."""
    z = s.z
    jump = jump_rate_constant(p) / (p.gamma + p.k2) * np.exp(p.k2 * s.u_at(-1.0)) * law.var
    return (
        p.delta * np.asarray(x, dtype=float)
        + 0.5 * z * z
        - 0.5 * p.gamma * p.sigma**2 * z * z
        + z * p.k1 * law.mean
        + jump
    )


def H_sup(t, x, s: IncentiveSlice, law: LawMoments, p: MarketParams):
    return H_hat(t, x, s, law, p) + p.g(t, x)


@dataclass(frozen=True)
class ControlGrid:
    """A finite set of candidate controls, kept in lexicographic order.

    ``np.argmax`` returns the first maximiser, so lexicographic storage gives
    the lexicographically smallest control among ties.
    """

    points: np.ndarray  # shape (n, 2)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if pts.shape[0] == 0:
            raise EmptyGrid("control grid is empty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("control grid must be finite")
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        object.__setattr__(self, "points", pts[order])

    @classmethod
    def product(cls, alpha0_values, alpha1_values) -> "ControlGrid":
        a0, a1 = np.meshgrid(np.asarray(alpha0_values, float), np.asarray(alpha1_values, float), indexing="ij")
        return cls(np.column_stack([a0.ravel(), a1.ravel()]))

    @classmethod
    def box(cls, center, half_width=5.0, n=2001) -> "ControlGrid":
        c0, c1 = center
        return cls.product(np.linspace(c0 - half_width, c0 + half_width, n),
                           np.linspace(c1 - half_width, c1 + half_width, n))

    def __len__(self):
        return self.points.shape[0]


def best_response_grid(t, x, s: IncentiveSlice, law: LawMoments, model: GenericModel, gamma: float,
                       grid: ControlGrid) -> ControlPoint:
    """Grid point maximising ``h``; ties go to the lexicographically smallest point."""
    if not isinstance(grid, ControlGrid):
        grid = ControlGrid(grid)
    pts = grid.points
    values = np.broadcast_to(h_integrand(t, x, s, law, (pts[:, 0], pts[:, 1]), model, gamma), (len(pts),))
    i = int(np.argmax(values))
    return ControlPoint(float(pts[i, 0]), float(pts[i, 1]))


def refine_best_response(t, x, s: IncentiveSlice, law: LawMoments, model: GenericModel, gamma: float,
                         bounds, n=41, levels=6, shrink=0.1) -> ControlPoint:
    """Zooming grid search: search a box, recentre on the argmax, shrink, repeat.

    ``bounds = ((lo0, hi0), (lo1, hi1))``. Each level uses an ``n x n`` grid;
    the final resolution is the initial step times ``shrink ** (levels - 1)``.
    The zoom never leaves the original bounds.
    """
    (lo0, hi0), (lo1, hi1) = bounds
    c0, c1 = 0.5 * (lo0 + hi0), 0.5 * (lo1 + hi1)
    w0, w1 = 0.5 * (hi0 - lo0), 0.5 * (hi1 - lo1)
    best = None
    for _ in range(levels):
        a0 = np.linspace(max(lo0, c0 - w0), min(hi0, c0 + w0), n)
        a1 = np.linspace(max(lo1, c1 - w1), min(hi1, c1 + w1), n)
        best = best_response_grid(t, x, s, law, model, gamma, ControlGrid.product(a0, a1))
        c0, c1 = best
        # keep at least two old steps on each side so the optimum stays bracketed
        w0 = max(w0 * shrink, 2 * (a0[1] - a0[0]) if n > 1 else 0.0)
        w1 = max(w1 * shrink, 2 * (a1[1] - a1[0]) if n > 1 else 0.0)
    return best


def refine_best_response_batch(t, x, s: IncentiveSlice, law: LawMoments, model: GenericModel, gamma: float,
                               bounds, n=21, levels=5, shrink=0.15):
    """Vectorised zooming search for many states ``x`` at once.

    Returns ``(alpha0, alpha1)`` arrays shaped like ``x``. Ties inside a
    level resolve to the lexicographically smallest grid point.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    (lo0, hi0), (lo1, hi1) = bounds
    c0 = np.full(flat.shape, 0.5 * (lo0 + hi0))
    c1 = np.full(flat.shape, 0.5 * (lo1 + hi1))
    w0, w1 = 0.5 * (hi0 - lo0), 0.5 * (hi1 - lo1)
    u = np.linspace(-1.0, 1.0, n)
    g0, g1 = np.meshgrid(u, u, indexing="ij")
    g0, g1 = g0.ravel(), g1.ravel()
    for _ in range(levels):
        a0 = np.clip(c0[:, None] + w0 * g0[None, :], lo0, hi0)
        a1 = np.clip(c1[:, None] + w1 * g1[None, :], lo1, hi1)
        vals = h_integrand(t, flat[:, None], s, law, (a0, a1), model, gamma)
        vals = np.broadcast_to(vals, a0.shape)
        i = np.argmax(vals, axis=1)
        rows = np.arange(flat.size)
        c0, c1 = a0[rows, i], a1[rows, i]
        step0, step1 = 2 * w0 / max(n - 1, 1), 2 * w1 / max(n - 1, 1)
        w0 = max(w0 * shrink, 2 * step0)
        w1 = max(w1 * shrink, 2 * step1)
    return c0.reshape(x.shape), c1.reshape(x.shape)
