"""Market parameters and the demand-response instance of the generic model.

The producer/consumer split of the running cost is affine:
``f(t, x) = f0 + f1 x`` and ``g(t, x) = f0 + (f1 - delta) x`` so that
``f - g = delta * x`` holds for every choice of ``(f0, f1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidParameter


class LawMoments(NamedTuple):
    """First two moments of the population law at one instant."""

    mean: float
    var: float


@dataclass(frozen=True)
class MarketParams:
    """Scalar parameters of the demand-response model.

    Defaults are the reference configuration used throughout the test suite.
    ``f_slope=None`` resolves to ``delta`` so that ``g`` vanishes identically.
    """

    gamma: float = 1.0
    sigma: float = 0.5
    k1: float = 0.5
    k2: float = 1.0
    delta: float = 0.2
    beta: float = 1.0
    theta: float = 0.5
    horizon: float = 1.0
    reservation: float = -1.0
    m0: float = 0.0
    v0: float = 0.0
    f_slope: float | None = None
    f_intercept: float = 0.0

    def __post_init__(self):
        if self.f_slope is None:
            object.__setattr__(self, "f_slope", self.delta)

    @property
    def g_slope(self) -> float:
        return self.f_slope - self.delta

    @property
    def g_intercept(self) -> float:
        return self.f_intercept

    def f(self, t, x):
        return self.f_intercept + self.f_slope * np.asarray(x, dtype=float)

    def g(self, t, x):
        return self.g_intercept + self.g_slope * np.asarray(x, dtype=float)

    def replace(self, **changes) -> "MarketParams":
        # keep g == 0 convention when delta moves and the slope was defaulted
        if "delta" in changes and "f_slope" not in changes and self.f_slope == self.delta:
            changes["f_slope"] = None
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def check_params(p: MarketParams) -> list[tuple[str, str]]:
    """Return every violated invariant as ``(field, reason)`` pairs."""
    bad = []
    for f in fields(p):
        value = getattr(p, f.name)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            bad.append((f.name, f"must be a real number, got {value!r}"))
        elif not math.isfinite(value):
            bad.append((f.name, "must be finite"))
    if bad:
        return bad
    for name in ("gamma", "sigma", "k2", "horizon"):
        if not getattr(p, name) > 0:
            bad.append((name, "must be > 0"))
    for name in ("theta", "v0"):
        if getattr(p, name) < 0:
            bad.append((name, "must be >= 0"))
    if not p.reservation < 0:
        bad.append(("reservation", "must be < 0 so that log(-R0) is defined"))
    return bad


def validate_params(p: MarketParams) -> MarketParams:
    """Return ``p`` unchanged, or raise :class:`InvalidParameter` listing all violations."""
    bad = check_params(p)
    if bad:
        raise InvalidParameter(bad[0][0], bad[0][1], bad)
    return p


@dataclass(frozen=True)
class GenericModel:
    """Coefficients of a one-dimensional controlled jump model with finite marks.

    Every coefficient takes ``a = (alpha0, alpha1)`` as a pair of arrays (or
    floats) and must broadcast over them. ``law`` is a :class:`LawMoments`.

    ``control_depends_on_state=False`` declares that ``x`` enters the
    Hamiltonian only additively, so one argmax per time step serves all paths.
    """

    drift: Callable  # (t, x, law, a) -> b
    vol: Callable  # (t, x) -> sigma
    run_cost: Callable  # (t, x, law, a) -> c0
    jump_reward: Callable  # (t, x, mark, law, a) -> c1
    intensity_tilt: Callable  # (t, x, mark, law, a) -> K
    marks: Sequence[float] = (-1.0,)
    base_rates: Sequence[float] = (1.0,)
    control_depends_on_state: bool = True

    def __post_init__(self):
        if len(self.marks) == 0:
            raise InvalidParameter("marks", "at least one mark is required")
        if len(self.marks) != len(self.base_rates):
            raise InvalidParameter("base_rates", "must have the same length as marks")
        if any(r < 0 for r in self.base_rates):
            raise InvalidParameter("base_rates", "must be >= 0")


def example_model(p: MarketParams) -> GenericModel:
    """The demand-response instance: one accident mark at -1 with unit base rate."""
    validate_params(p)
    k1, k2, sigma = p.k1, p.k2, p.sigma

    def drift(t, x, law, a):
        return a[0] + k1 * law.mean

    def vol(t, x):
        return sigma

    def run_cost(t, x, law, a):
        return 0.5 * np.square(a[0]) - p.f(t, x)

    def jump_reward(t, x, mark, law, a):
        return a[1]

    def intensity_tilt(t, x, mark, law, a):
        return np.exp(-k2 * np.asarray(a[1], dtype=float)) * law.var

    return GenericModel(
        drift=drift,
        vol=vol,
        run_cost=run_cost,
        jump_reward=jump_reward,
        intensity_tilt=intensity_tilt,
        marks=(-1.0,),
        base_rates=(1.0,),
        control_depends_on_state=False,
    )
