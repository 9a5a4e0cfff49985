"""Optimal contract exposures and the effort they induce."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .hamiltonian import IncentiveSlice, optimal_mitigation_shift
from .model import MarketParams


def reservation_level(p: MarketParams) -> float:
    """Certainty equivalent of the reservation utility, ``-log(-R0) / gamma``."""
    return 0.0 - math.log(-p.reservation) / p.gamma  # avoid -0.0 at R0 = -1


@dataclass(frozen=True)
class IncentivePolicy:
    """Deterministic contract: ``xi = Y_T`` started at ``y0`` with exposures ``z``, ``u``."""

    y0: float
    z_of_t: Callable
    u_of_t: Callable  # (t, mark) -> exposure to that jump mark

    def slice(self, t) -> IncentiveSlice:
        return IncentiveSlice(float(self.z_of_t(t)), {-1.0: float(self.u_of_t(t, -1.0))})

    def with_y0(self, y0: float) -> "IncentivePolicy":
        return IncentivePolicy(y0, self.z_of_t, self.u_of_t)

    @classmethod
    def from_table(cls, t, z, u_minus1, y0: float) -> "IncentivePolicy":
        """Piecewise-linear policy through tabulated exposures (e.g. a policy CSV)."""
        t = np.asarray(t, dtype=float)
        z = np.asarray(z, dtype=float)
        u = np.asarray(u_minus1, dtype=float)
        return cls(y0, lambda s: np.interp(s, t, z), lambda s, mark=-1.0: np.interp(s, t, u))


@dataclass(frozen=True)
class AgentPolicy:
    a0_of_t: Callable
    a1_of_t: Callable

    def shifted(self, eps0: float = 0.0, eps1: float = 0.0) -> "AgentPolicy":
        """Constant-shift deviation ``(alpha0 + eps0, alpha1 + eps1)``."""
        if eps0 == 0.0 and eps1 == 0.0:
            return self
        a0, a1 = self.a0_of_t, self.a1_of_t
        return AgentPolicy(lambda t: a0(t) + eps0, lambda t: a1(t) + eps1)


def optimal_policy(coeffs, p: MarketParams, y0: float | None = None) -> IncentivePolicy:
    """Exposures maximising the principal's Hamiltonian; ``y0`` defaults to the reservation level."""
    denom = 1.0 + p.gamma * p.sigma**2
    shift = 1.0 / (p.gamma + p.k2) - 1.0 / p.k2

    def z_of_t(t):
        return coeffs.h1_at(t) / denom

    def u_of_t(t, mark=-1.0):
        if mark != -1.0:
            raise KeyError(f"no jump exposure for mark {mark}")
        return shift - coeffs.h1_at(t) + coeffs.h2_at(t)

    return IncentivePolicy(reservation_level(p) if y0 is None else float(y0), z_of_t, u_of_t)


def equilibrium_agent_policy(pol: IncentivePolicy, p: MarketParams) -> AgentPolicy:
    """Pointwise closed-form best response to the policy's exposures."""
    shift = optimal_mitigation_shift(p)
    return AgentPolicy(lambda t: pol.z_of_t(t), lambda t: shift - pol.u_of_t(t, -1.0))


def sup_norm(pol: IncentivePolicy, grid) -> tuple[float, float]:
    """``(max |z|, max |u(-1)|)`` on a time grid; the policy is admissible when both are finite."""
    grid = np.asarray(grid, dtype=float)
    z = np.asarray(pol.z_of_t(grid), dtype=float)
    u = np.asarray(pol.u_of_t(grid, -1.0), dtype=float)
    return float(np.max(np.abs(z))), float(np.max(np.abs(u)))


def check_bounded(pol: IncentivePolicy, grid) -> None:
    zmax, umax = sup_norm(pol, grid)
    if not (math.isfinite(zmax) and math.isfinite(umax)):
        raise ValueError("incentive policy is unbounded on the grid")


__all__ = [
    "AgentPolicy",
    "IncentivePolicy",
    "check_bounded",
    "equilibrium_agent_policy",
    "optimal_policy",
    "reservation_level",
    "sup_norm",
]
