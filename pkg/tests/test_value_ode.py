import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfcontract.errors import HorizonTooLong, InvalidParameter, QuadratureError
from mfcontract.model import MarketParams
from mfcontract.quadrature import integrate
from mfcontract.value_ode import (h0_quadrature, h1_closed, h2_closed, h_rate_from, hjb_residual, rk4_backward,
                                  solve_coefficients)

# frozen at the reference configuration (closed forms + Gauss-Legendre quadrature)
H0_0 = 0.77605633945976793
H1_0 = 1.9082097789801795
H2_0 = -0.18892734507887785
RATE_0 = 0.037243259460212029


# -- quadrature ---------------------------------------------------------------

@given(st.lists(st.floats(-3, 3), min_size=1, max_size=8), st.floats(-2, 2), st.floats(0.01, 3))
def test_quadrature_exact_on_polynomials(coefs, a, width):
    poly = np.polynomial.Polynomial(coefs)
    b = a + width
    exact = poly.integ()(b) - poly.integ()(a)
    assert integrate(poly, a, b) == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_quadrature_vectorised_and_empty_interval():
    a = np.array([0.0, 0.5, 1.0])
    out = integrate(np.exp, a, 1.0)
    np.testing.assert_allclose(out, math.e - np.exp(a), rtol=1e-13)
    assert out[-1] == 0.0


def test_quadrature_reports_failure():
    with pytest.raises(QuadratureError):
        integrate(lambda s: np.sin(1e6 * s) * 1e3, 0.0, 1.0, max_level=2)


def test_quadrature_passes_through_overflow():
    with np.errstate(over="ignore"):
        assert integrate(lambda s: np.exp(1e3 * s), 0.0, 1.0) == math.inf


# -- closed forms -------------------------------------------------------------

def test_frozen_values_at_reference(p0):
    c = solve_coefficients(p0)
    assert c.h0[0] == pytest.approx(H0_0, abs=1e-14)
    assert c.h1[0] == pytest.approx(H1_0, abs=1e-14)
    assert c.h2[0] == pytest.approx(H2_0, abs=1e-14)
    assert c.h_rate[0] == pytest.approx(RATE_0, abs=1e-15)


def test_h1_hand_value(p0):
    assert h1_closed(0.0, p0) == pytest.approx(1.4 * math.exp(0.5) - 0.4, rel=1e-15)
    assert h1_closed(p0.horizon, p0) == p0.beta


def test_h1_small_k1_limit(p0):
    assert h1_closed(0.0, p0.replace(k1=0.0)) == pytest.approx(1.2, rel=1e-15)
    assert h1_closed(0.0, p0.replace(k1=1e-9)) == pytest.approx(1.2, rel=1e-8)


def test_terminal_conditions_exact(p0):
    c = solve_coefficients(p0)
    assert (c.h0[-1], c.h1[-1], c.h2[-1]) == (0.0, 1.0, -0.25)
    c.check_invariants()


def test_h2_vanishes_for_short_horizon_without_penalty(p0):
    p = p0.replace(theta=0.0, horizon=1e-9)
    assert h2_closed(0.0, p) == pytest.approx(0.0, abs=1e-9)


def test_h2_matches_fine_rk4(p0):
    t, _, _, h2 = rk4_backward(p0, step=1e-5)
    assert h2_closed(0.0, p0) == pytest.approx(h2[0], rel=1e-6)


def test_h0_matches_trapezoid_oracle(p0):
    s = np.linspace(0.0, 1.0, 100_001)
    h1 = h1_closed(s, p0)
    rate = h1**2 / (2 * (1 + p0.gamma * p0.sigma**2)) + p0.sigma**2 * h2_closed(s, p0)
    trap = np.sum(0.5 * (rate[1:] + rate[:-1]) * np.diff(s))
    assert h0_quadrature(0.0, p0) == pytest.approx(trap, abs=1e-8)


def test_closed_forms_match_rk4_everywhere(p0):
    t, h0, h1, h2 = rk4_backward(p0, step=1e-4)
    assert np.max(np.abs(h0_quadrature(t, p0) - h0)) <= 1e-6
    assert np.max(np.abs(h1_closed(t, p0) - h1)) <= 1e-6
    assert np.max(np.abs(h2_closed(t, p0) - h2)) <= 1e-6


def test_h2_strictly_decreasing_and_rate_positive(p0):
    c = solve_coefficients(p0)
    assert np.all(np.diff(c.h2) < 0)
    assert np.all(c.h_rate > 0)
    np.testing.assert_allclose(c.h_rate, h_rate_from(c.h1, c.h2, p0), rtol=0, atol=0)


def test_interpolation_and_exact_evaluators_agree_on_grid(p0):
    c = solve_coefficients(p0)
    np.testing.assert_array_equal(c.interp("h1", c.grid), c.h1)
    assert c.interp("h2", 0.0025) == pytest.approx(c.h2_at(0.0025), abs=1e-6)


def test_long_horizon_with_negative_slope_fails(p0):
    p = p0.replace(beta=-1.0, horizon=100.0)
    with pytest.raises(HorizonTooLong) as exc:
        solve_coefficients(p)
    # the log argument vanishes a little before T; every earlier time is invalid too
    assert 98.0 < exc.value.t_critical < 99.0
    assert exc.value.t_invalid <= exc.value.t_critical + 1e-9


def test_large_penalty_keeps_solution_valid(p0):
    p = p0.replace(beta=-1.0, horizon=5.0)
    with pytest.raises(HorizonTooLong):
        solve_coefficients(p)
    solve_coefficients(p.replace(theta=50.0)).check_invariants()


def test_invalid_parameters_rejected(p0):
    with pytest.raises(InvalidParameter):
        solve_coefficients(p0.replace(k2=0.0))
    with pytest.raises(ValueError):
        solve_coefficients(p0, n_grid=1)


@settings(max_examples=15, deadline=None)
@given(k1=st.floats(-1, 1), delta=st.floats(-0.5, 0.5), beta=st.floats(0.2, 2), theta=st.floats(0, 2))
def test_closed_forms_solve_the_ode_system(k1, delta, beta, theta):
    p = MarketParams(k1=k1, delta=delta, beta=beta, theta=theta)
    t, h0, h1, h2 = rk4_backward(p, step=1e-3)
    assert np.max(np.abs(h1_closed(t, p) - h1)) < 1e-9
    assert np.max(np.abs(h2_closed(t, p) - h2)) < 1e-9
    assert np.max(np.abs(h0_quadrature(t, p) - h0)) < 1e-9


# -- HJB residual -------------------------------------------------------------

SAMPLES = np.array([(m, v) for m in np.linspace(-2, 2, 5) for v in np.linspace(0, 2, 5)])


def test_hjb_residual_small(p0):
    assert hjb_residual(solve_coefficients(p0), p0, SAMPLES) <= 1e-6


def test_hjb_residual_origin_sample_is_h0_equation(p0):
    c = solve_coefficients(p0)
    r = hjb_residual(c, p0, [(0.0, 0.0)])
    h1 = c.h1
    d0 = np.gradient(c.h0, c.grid, edge_order=2)
    direct = np.max(np.abs(d0 + h1**2 / (2 * (1 + p0.gamma * p0.sigma**2)) + p0.sigma**2 * c.h2))
    assert r <= 1e-6 and direct < 1e-3


class _Shifted:
    def __init__(self, c, dh2):
        self.grid, self.c, self.dh2 = c.grid, c, dh2

    def h0_at(self, t):
        return self.c.h0_at(t)

    def h1_at(self, t):
        return self.c.h1_at(t)

    def h2_at(self, t):
        return self.c.h2_at(t) + self.dh2


def test_hjb_residual_detects_corrupted_h2(p0):
    assert hjb_residual(_Shifted(solve_coefficients(p0), 0.01), p0, SAMPLES) > 1e-3


@pytest.mark.parametrize("changes", [{}, {"k1": -0.7, "beta": -1.0}, {"k1": 2.0, "beta": 0.5, "delta": 3.0},
                                     {"k1": 1e-9}, {"k1": 0.005}])
def test_load_integral_matches_quadrature(p0, changes):
    from mfcontract.value_ode import _exp_h1_integral
    p = p0.replace(**changes)
    t = np.linspace(0.0, p.horizon, 51)
    ref = integrate(lambda s: np.exp(-p.k2 * h1_closed(s, p)), t, p.horizon)
    np.testing.assert_allclose(_exp_h1_integral(t, p), ref, rtol=1e-12, atol=1e-14)
