import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfcontract.errors import EmptyGrid, NonFiniteValue
from mfcontract.hamiltonian import (ControlGrid, ControlPoint, H_hat, H_sup, IncentiveSlice, best_response_closed,
                                    best_response_grid, h_integrand, jump_rate_constant, refine_best_response,
                                    refine_best_response_batch)
from mfcontract.model import GenericModel, LawMoments, MarketParams, example_model

P0 = MarketParams()
MODEL = example_model(P0)


def h(p, x, s, law, a, model=None):
    return float(h_integrand(0.3, x, s, law, a, model or example_model(p), p.gamma))


def test_h_vanishes_at_origin():
    p = MarketParams(f_slope=0.0, delta=0.0)
    assert h(p, 0.0, IncentiveSlice(0.0, {-1.0: 0.0}), LawMoments(0.0, 0.0), (0.0, 0.0)) == 0.0


def test_h_hand_value_diffusion_part():
    # f(0) + z a0 - a0^2/2 - gamma sigma^2 z^2 / 2 = 0 + 1 - 0.5 - 0.125
    assert h(P0, 0.0, IncentiveSlice(1.0, {-1.0: 0.0}), LawMoments(0.0, 0.0), (1.0, 0.0)) == pytest.approx(0.375)


def test_h_hand_value_jump_part():
    a1 = math.log(2.0)
    val = h(P0, 0.0, IncentiveSlice(0.0, {-1.0: 0.0}), LawMoments(0.0, 1.0), (0.0, a1))
    assert val == pytest.approx(0.25, abs=1e-15)


def test_h_rejects_non_finite_coefficients():
    bad = GenericModel(lambda t, x, law, a: np.nan * a[0], lambda t, x: 1.0, lambda t, x, law, a: 0.0,
                       lambda *a: 0.0, lambda *a: 1.0)
    with pytest.raises(NonFiniteValue):
        h_integrand(0.0, 0.0, IncentiveSlice(1.0), LawMoments(0, 0), (0.0, 0.0), bad, 1.0)


def test_closed_form_best_response_examples():
    assert best_response_closed(IncentiveSlice(0.7, {-1.0: 0.0}), P0).alpha0 == 0.7
    assert best_response_closed(IncentiveSlice(0.0, {-1.0: 0.0}), P0).alpha1 == pytest.approx(math.log(2))
    assert best_response_closed(IncentiveSlice(0.0, {-1.0: math.log(2)}), P0).alpha1 == pytest.approx(0.0, abs=1e-15)


def test_grid_search_on_mitigation_axis_finds_log2():
    s = IncentiveSlice(0.0, {-1.0: 0.0})
    grid = ControlGrid.product([0.0], np.round(np.arange(0.0, 2.0, 1e-4), 4))
    best = best_response_grid(0.0, 0.0, s, LawMoments(0.0, 1.0), MODEL, P0.gamma, grid)
    assert abs(best.alpha1 - math.log(2)) <= 1e-4


def test_grid_single_point_and_ties():
    s = IncentiveSlice(0.0, {-1.0: 0.0})
    law = LawMoments(0.0, 0.0)
    assert best_response_grid(0.0, 0.0, s, law, MODEL, 1.0, [[0.4, 0.9]]) == ControlPoint(0.4, 0.9)
    # zero variance: h does not depend on alpha1, so the lexicographically smaller point wins
    assert best_response_grid(0.0, 0.0, s, law, MODEL, 1.0, [[0.0, 3.0], [0.0, -2.0]]) == ControlPoint(0.0, -2.0)
    with pytest.raises(EmptyGrid):
        ControlGrid(np.empty((0, 2)))


def test_H_sup_examples():
    s = IncentiveSlice(0.0, {-1.0: 0.0})
    assert H_sup(0.0, 0.0, s, LawMoments(0.0, 0.0), P0) == 0.0
    assert H_sup(0.0, 0.0, s, LawMoments(0.0, 1.0), P0) == pytest.approx(0.25, abs=1e-15)


slices = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 3))


@given(slices)
def test_envelope_identity(args):
    z, u, x, m, v = args
    s = IncentiveSlice(z, {-1.0: u})
    law = LawMoments(m, v)
    a = best_response_closed(s, P0)
    assert H_sup(0.2, x, s, law, P0) == pytest.approx(h(P0, x, s, law, a), abs=1e-12, rel=1e-12)


@given(slices, st.floats(-2, 2), st.floats(-2, 2))
def test_supremum_dominates_any_control(args, d0, d1):
    z, u, x, m, v = args
    s = IncentiveSlice(z, {-1.0: u})
    law = LawMoments(m, v)
    a = best_response_closed(s, P0)
    other = h(P0, x, s, law, (a.alpha0 + d0, a.alpha1 + d1))
    assert other <= float(H_sup(0.2, x, s, law, P0)) + 1e-10


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_quadratic_coefficient_in_z(sigma):
    p = P0.replace(sigma=sigma)
    law = LawMoments(0.3, 0.7)
    f = lambda z: float(H_hat(0.0, 0.1, IncentiveSlice(z, {-1.0: 0.2}), law, p))
    second = f(1.0) - 2 * f(0.0) + f(-1.0)
    assert second / 2 == pytest.approx((1 - p.gamma * sigma**2) / 2, abs=1e-12)


def test_jump_rate_constant_at_reference():
    assert jump_rate_constant(P0) == pytest.approx(0.5)


@settings(max_examples=20, deadline=None)
@given(slices)
def test_refined_search_matches_closed_form(args):
    z, u, x, m, v = args
    if v < 0.05:
        v += 0.05
    s = IncentiveSlice(z, {-1.0: u})
    law = LawMoments(m, v)
    a = best_response_closed(s, P0)
    r = refine_best_response(0.0, x, s, law, MODEL, P0.gamma, ((-5, 5), (-10, 10)))
    assert abs(r.alpha0 - a.alpha0) < 1e-5 and abs(r.alpha1 - a.alpha1) < 1e-5
    b0, b1 = refine_best_response_batch(0.0, np.array([x, x + 1.0]), s, law, MODEL, P0.gamma, ((-5, 5), (-10, 10)))
    assert np.all(np.abs(b0 - a.alpha0) < 1e-3) and np.all(np.abs(b1 - a.alpha1) < 1e-3)
