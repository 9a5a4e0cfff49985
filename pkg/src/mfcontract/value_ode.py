"""Coefficients h0, h1, h2 of the principal's quadratic value function.

The principal's value is ``V(t, mu) = h0(t) + h1(t) m_x + h2(t) Var_x - m_y``.
The coefficients solve a triangular terminal-value system:

    h1' = -k1 h1 - delta,                          h1(T) = beta
    h2' = -(1/k2) c exp(-gamma/(gamma+k2) - k2 h1 + k2 h2),  h2(T) = -theta/2
    h0' = -(h1^2 / (2 (1 + gamma sigma^2)) + sigma^2 h2),     h0(T) = 0

with ``c = ((gamma+k2)/k2)^(-k2/gamma)``. h1 is explicit, h2 follows from
linearising ``exp(-k2 h2)``, h0 is a quadrature. The h2 closed form only
exists while ``exp(k2 theta / 2) > c e^{-gamma/(gamma+k2)} int_t^T exp(-k2 h1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expi

from .errors import HorizonTooLong
from .hamiltonian import jump_rate_constant
from .model import MarketParams, validate_params
from .quadrature import integrate

K1_EPS = 1e-12


def h1_closed(t, p: MarketParams):
    tau = p.horizon - np.asarray(t, dtype=float)
    if abs(p.k1) < K1_EPS:
        return p.beta + p.delta * tau
    # beta e^{k1 tau} + delta (e^{k1 tau} - 1) / k1, written to survive small k1
    return p.beta * np.exp(p.k1 * tau) + p.delta * np.expm1(p.k1 * tau) / p.k1


def _rate_prefactor(p: MarketParams) -> float:
    return jump_rate_constant(p) * math.exp(-p.gamma / (p.gamma + p.k2))


def _h2_load(t, p: MarketParams):
    """``c e^{-gamma/(gamma+k2)} e^{-k2 theta/2} int_t^T exp(-k2 h1(s)) ds``; h2 exists iff < 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        q = _exp_h1_integral(t, p)
    return _rate_prefactor(p) * math.exp(-0.5 * p.k2 * p.theta) * q


def _exp_h1_integral(t, p: MarketParams):
    """``int_t^T exp(-k2 h1(s)) ds``.

    With ``h1 = a e^{k1 tau} - delta/k1`` the substitution ``w = k2 a e^{k1 tau}``
    turns the integrand into ``e^{-w} / w``, whose antiderivative is ``Ei(-w)``.
    Quadrature covers small ``k1``, ``a = 0`` and overflow, where that form
    degenerates or cancels.
    """
    quad = lambda: integrate(lambda s: np.exp(-p.k2 * h1_closed(s, p)), t, p.horizon)
    if abs(p.k1) < 1e-2 or abs(p.k2 * p.delta / p.k1) > 50.0 or p.beta + p.delta / p.k1 == 0.0:
        return quad()
    c = p.k2 * (p.beta + p.delta / p.k1)
    w = c * np.exp(p.k1 * (p.horizon - t))
    with np.errstate(invalid="ignore"):
        out = math.exp(p.k2 * p.delta / p.k1) * (expi(-w) - expi(-c)) / p.k1
    return out if np.all(np.isfinite(out)) else quad()


def _critical_time(p: MarketParams) -> float | None:
    fn = lambda t: min(float(_h2_load(t, p)), 2.0) - 1.0  # clamp keeps brentq finite
    if fn(0.0) < 0:
        return None
    return brentq(fn, 0.0, p.horizon, xtol=1e-12)


def h2_closed(t, p: MarketParams):
    t = np.asarray(t, dtype=float)
    load = _h2_load(t, p)
    if np.any(load >= 1.0):
        bad = np.atleast_1d(t)[np.atleast_1d(load >= 1.0)]
        raise HorizonTooLong(bad.max(), _critical_time(p))
    return -0.5 * p.theta - np.log1p(-load) / p.k2


def h_rate_from(h1, h2, p: MarketParams):
    """Jump-rate factor ``h(t)``: accident intensity per unit of population variance."""
    return jump_rate_constant(p) * np.exp(-p.gamma / (p.gamma + p.k2) - p.k2 * np.asarray(h1) + p.k2 * np.asarray(h2))


def _h0_rate(s, p: MarketParams):
    h1 = h1_closed(s, p)
    return h1 * h1 / (2.0 * (1.0 + p.gamma * p.sigma**2)) + p.sigma**2 * h2_closed(s, p)


def h0_quadrature(t, p: MarketParams):
    t = np.asarray(t, dtype=float)
    # validity on [t, T] is decided at the earliest time
    h2_closed(np.min(t), p)
    return integrate(lambda s: _h0_rate(s, p), t, p.horizon)


@dataclass(frozen=True)
class ValueCoefficients:
    """Coefficient curves on a uniform grid plus exact evaluators at any time."""

    params: MarketParams
    grid: np.ndarray
    h0: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    h_rate: np.ndarray

    def h0_at(self, t):
        return h0_quadrature(t, self.params)

    def h1_at(self, t):
        return h1_closed(t, self.params)

    def h2_at(self, t):
        return h2_closed(t, self.params)

    def rate_at(self, t):
        return h_rate_from(self.h1_at(t), self.h2_at(t), self.params)

    def interp(self, name: str, t):
        """Linear interpolation of a stored curve (``h0``, ``h1``, ``h2`` or ``h_rate``)."""
        return np.interp(t, self.grid, getattr(self, name))

    def check_invariants(self) -> None:
        p = self.params
        assert self.h1[-1] == p.beta, "h1(T) != beta"
        assert self.h2[-1] == -0.5 * p.theta, "h2(T) != -theta/2"
        assert self.h0[-1] == 0.0, "h0(T) != 0"
        assert np.all(self.h2 >= -0.5 * p.theta), "h2 below its terminal value"
        assert np.all(self.h_rate > 0), "jump-rate factor not positive"
        assert np.all(np.diff(self.grid) > 0), "grid not increasing"


def solve_coefficients(p: MarketParams, n_grid: int = 201) -> ValueCoefficients:
    validate_params(p)
    if n_grid < 2:
        raise ValueError("n_grid must be >= 2")
    grid = np.linspace(0.0, p.horizon, n_grid)
    load = _h2_load(grid, p)
    if np.any(load >= 1.0):
        raise HorizonTooLong(grid[load >= 1.0].max(), _critical_time(p))
    h1 = h1_closed(grid, p)
    h2 = -0.5 * p.theta - np.log1p(-load) / p.k2
    h0 = h0_quadrature(grid, p)
    coeffs = ValueCoefficients(p, grid, h0, h1, h2, h_rate_from(h1, h2, p))
    coeffs.check_invariants()
    return coeffs


def rk4_backward(p: MarketParams, step: float = 1e-4):
    """Integrate the terminal-value system backward with classical RK4.

    Independent of the closed forms; returns ``(t, h0, h1, h2)`` arrays on
    the grid ``T, T - step, ..., 0`` (re-ordered to increasing time).
    """
    n = max(1, int(round(p.horizon / step)))
    dt = p.horizon / n
    c = _rate_prefactor(p)
    k1, k2, delta = p.k1, p.k2, p.delta
    s2 = p.sigma**2
    denom = 2.0 * (1.0 + p.gamma * s2)
    exp = math.exp

    def rhs(h0, h1, h2):
        return (
            -(h1 * h1 / denom + s2 * h2),
            -k1 * h1 - delta,
            -c * exp(-k2 * h1 + k2 * h2) / k2,
        )

    out = np.empty((n + 1, 3))
    y = (0.0, p.beta, -0.5 * p.theta)
    out[n] = y
    h = -dt
    for i in range(n, 0, -1):
        a = rhs(*y)
        b = rhs(y[0] + 0.5 * h * a[0], y[1] + 0.5 * h * a[1], y[2] + 0.5 * h * a[2])
        cc = rhs(y[0] + 0.5 * h * b[0], y[1] + 0.5 * h * b[1], y[2] + 0.5 * h * b[2])
        d = rhs(y[0] + h * cc[0], y[1] + h * cc[1], y[2] + h * cc[2])
        y = tuple(y[j] + h / 6.0 * (a[j] + 2 * b[j] + 2 * cc[j] + d[j]) for j in range(3))
        if not all(map(math.isfinite, y)):
            raise HorizonTooLong(dt * (i - 1))
        out[i - 1] = y
    t = np.linspace(0.0, p.horizon, n + 1)
    return t, out[:, 0], out[:, 1], out[:, 2]


def _fd(fun, t, step, lo, hi):
    """Second-order central difference, one-sided three-point at the ends."""
    t = np.asarray(t, dtype=float)
    left = t - step < lo - 1e-15
    right = t + step > hi + 1e-15
    central = ~(left | right)
    d = np.empty_like(t)
    if np.any(central):
        tc = t[central]
        d[central] = (fun(tc + step) - fun(tc - step)) / (2 * step)
    if np.any(left):
        tl = t[left]
        d[left] = (-3 * fun(tl) + 4 * fun(tl + step) - fun(tl + 2 * step)) / (2 * step)
    if np.any(right):
        tr = t[right]
        d[right] = (3 * fun(tr) - 4 * fun(tr - step) + fun(tr - 2 * step)) / (2 * step)
    return d


def hjb_residual(coeffs, p: MarketParams, samples, fd_step: float = 1e-3, grid=None) -> float:
    """Max |dV/dt + sup_{z,u} <mu, L D_m V>| over grid times and ``(m, Var)`` samples.

    ``coeffs`` only needs ``h0_at``, ``h1_at``, ``h2_at`` evaluators, so a
    perturbed ansatz can be checked too. Time derivatives are finite
    differences with step ``fd_step``.
    """
    t = np.asarray(coeffs.grid if grid is None else grid, dtype=float)
    T = p.horizon
    h0, h1, h2 = coeffs.h0_at(t), coeffs.h1_at(t), coeffs.h2_at(t)
    d0 = _fd(coeffs.h0_at, t, fd_step, 0.0, T)
    d1 = _fd(coeffs.h1_at, t, fd_step, 0.0, T)
    d2 = _fd(coeffs.h2_at, t, fd_step, 0.0, T)
    rate = h_rate_from(h1, h2, p)
    worst = 0.0
    for m, var in np.atleast_2d(np.asarray(samples, dtype=float)):
        dV = d0 + d1 * m + d2 * var
        sup = (
            h1 * h1 / (2.0 * (1.0 + p.gamma * p.sigma**2))
            + h2 * p.sigma**2
            + (h1 * p.k1 + p.delta) * m
            + rate * var / p.k2
        )
        worst = max(worst, float(np.max(np.abs(dV + sup))))
    return worst
