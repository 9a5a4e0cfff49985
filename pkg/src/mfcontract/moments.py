"""Mean and variance flow of the equilibrium population.

Under the optimal contract the population law evolves through

    m' = k1 m - h(t) v + Z*(t)
    v' = h(t) v + sigma^2

where ``h(t) v`` is the accident intensity. The second moment follows as
``q = v + m^2``. Its ODE has two candidate jump terms, ``-h(2m+1)v`` and
``+h(1-2m)v``; only the second is consistent with the variance equation
(a unit down-jump moves ``x^2`` by ``1 - 2x``), and it is the one integrated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .model import MarketParams


@dataclass(frozen=True)
class MomentFlow:
    """Moment curves on a time grid.

    With derivative curves ``dm``/``dv`` the flow interpolates with cubic
    Hermite splines; otherwise linearly (as for empirical snapshot curves).
    """

    grid: np.ndarray
    m: np.ndarray
    v: np.ndarray
    dm: np.ndarray | None = None
    dv: np.ndarray | None = None

    @property
    def q(self) -> np.ndarray:
        return self.v + self.m**2

    def at(self, t):
        t = np.asarray(t, dtype=float)
        if self.dm is not None and self.dv is not None:
            m = CubicHermiteSpline(self.grid, self.m, self.dm)(t)
            v = CubicHermiteSpline(self.grid, self.v, self.dv)(t)
            return m, np.maximum(v, 0.0)
        return np.interp(t, self.grid, self.m), np.interp(t, self.grid, self.v)

    @classmethod
    def flat(cls, horizon: float, m0: float, v0: float) -> "MomentFlow":
        grid = np.array([0.0, horizon])
        return cls(grid, np.full(2, float(m0)), np.full(2, float(v0)))


def _rhs(m, v, z, rate, p: MarketParams):
    return p.k1 * m - rate * v + z, rate * v + p.sigma**2


def solve_moments(coeffs, p: MarketParams, n_grid: int | None = None) -> MomentFlow:
    """RK4 on a uniform grid; ``h(t)`` and ``Z*(t)`` are evaluated exactly at half steps."""
    n = len(coeffs.grid) if n_grid is None else int(n_grid)
    if n < 2:
        raise ValueError("n_grid must be >= 2")
    fine = np.linspace(0.0, p.horizon, 2 * n - 1)
    h1 = coeffs.h1_at(fine)
    rate = coeffs.rate_at(fine)
    z = h1 / (1.0 + p.gamma * p.sigma**2)
    dt = p.horizon / (n - 1)
    m = np.empty(n)
    v = np.empty(n)
    m[0], v[0] = p.m0, p.v0
    for i in range(n - 1):
        j = 2 * i
        a = _rhs(m[i], v[i], z[j], rate[j], p)
        b = _rhs(m[i] + 0.5 * dt * a[0], v[i] + 0.5 * dt * a[1], z[j + 1], rate[j + 1], p)
        c = _rhs(m[i] + 0.5 * dt * b[0], v[i] + 0.5 * dt * b[1], z[j + 1], rate[j + 1], p)
        d = _rhs(m[i] + dt * c[0], v[i] + dt * c[1], z[j + 2], rate[j + 2], p)
        m[i + 1] = m[i] + dt / 6.0 * (a[0] + 2 * b[0] + 2 * c[0] + d[0])
        v[i + 1] = v[i] + dt / 6.0 * (a[1] + 2 * b[1] + 2 * c[1] + d[1])
    dm, dv = _rhs(m, v, z[::2], rate[::2], p)
    return MomentFlow(fine[::2].copy(), m, v, dm, dv)


def jump_intensity(flow: MomentFlow, coeffs, t=None):
    """Population accident intensity ``h(t) v(t)``."""
    t = flow.grid if t is None else np.asarray(t, dtype=float)
    return coeffs.rate_at(t) * flow.at(t)[1]


def q_prime_variants(m, v, t, coeffs, p: MarketParams):
    """Right-hand sides of the second-moment ODE: ``(printed_variant, derived_variant)``.

    They share the drift and diffusion part and differ only in the jump term:
    ``-h (2m + 1) v`` against ``h (1 - 2m) v``; the difference is ``2 h v``.
    """
    rate = coeffs.rate_at(t)
    z = coeffs.h1_at(t) / (1.0 + p.gamma * p.sigma**2)
    common = 2 * p.k1 * m * m + p.sigma**2 + 2 * z * m
    return common - rate * (2 * m + 1) * v, common + rate * (1 - 2 * m) * v


def second_moment_variants(flow: MomentFlow, coeffs, p: MarketParams):
    """Integrate both q' variants along the flow's ``(m, v)`` path with Simpson's rule.

    Returns ``(q_printed, q_derived)`` on ``flow.grid``. ``q_derived`` reproduces
    ``flow.q`` up to quadrature error; ``q_printed`` falls short by ``int 2 h v``.
    """
    g = flow.grid
    mid = 0.5 * (g[1:] + g[:-1])
    mm, vm = flow.at(mid)
    pn, dn = q_prime_variants(flow.m, flow.v, g, coeffs, p)
    pm, dmid = q_prime_variants(mm, vm, mid, coeffs, p)
    dt = np.diff(g)
    q0 = p.v0 + p.m0**2
    printed = q0 + np.concatenate([[0.0], np.cumsum(dt / 6.0 * (pn[:-1] + 4 * pm + pn[1:]))])
    derived = q0 + np.concatenate([[0.0], np.cumsum(dt / 6.0 * (dn[:-1] + 4 * dmid + dn[1:]))])
    return printed, derived
