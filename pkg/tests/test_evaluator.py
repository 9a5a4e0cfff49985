import math

import numpy as np
import pytest

from mfcontract.evaluator import (MCEstimate, agent_value, ic_verify, martingale_check, moment_comparison,
                                  predicted_principal_value, principal_samples, principal_value)
from mfcontract.incentives import equilibrium_agent_policy, optimal_policy
from mfcontract.moments import solve_moments
from mfcontract.simulator import SimConfig, simulate_deviation, simulate_equilibrium
from mfcontract.value_ode import solve_coefficients

from test_simulator import NOISELESS

SMALL = SimConfig(n_paths=20_000)


def test_mc_estimate():
    e = MCEstimate.from_samples([1.0, 2.0, 3.0, 4.0])
    assert e.mean == 2.5 and e.n == 4
    assert e.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert MCEstimate.from_samples([5.0]).std_error == 0.0
    assert e.within(2.6) and not MCEstimate(0.0, 0.0, 10).within(1e-9)


def test_noiseless_agent_value_is_exact(p0):
    p = p0.replace(sigma=NOISELESS)
    coeffs = solve_coefficients(p)
    pol = optimal_policy(coeffs, p)
    ens = simulate_equilibrium(p, coeffs, pol, equilibrium_agent_policy(pol, p), solve_moments(coeffs, p),
                               SimConfig(n_paths=8, n_steps=50))
    v = agent_value(ens, p)
    assert v.std_error == 0.0
    assert v.mean == -math.exp(-p.gamma * ens.ybar_terminal[0])
    d = martingale_check(ens, p)
    np.testing.assert_allclose(d.increments, 0.0, atol=1e-15)
    assert d.martingale


def test_principal_value_reduces_to_minus_mean_contract(p0):
    p = p0.replace(theta=0.0, beta=0.0)
    coeffs = solve_coefficients(p)
    pol = optimal_policy(coeffs, p)
    ens = simulate_equilibrium(p, coeffs, pol, equilibrium_agent_policy(pol, p), solve_moments(coeffs, p), SMALL)
    assert np.all(ens.g_integral == 0.0)
    assert principal_value(ens, p).mean == pytest.approx(-ens.y_terminal.mean(), rel=1e-12)


def test_principal_value_estimator(p0, equilibrium_ensemble):
    ens = equilibrium_ensemble
    direct = (p0.beta * ens.x_terminal.mean() - ens.y_terminal.mean() - ens.g_integral.mean()
              - 0.5 * p0.theta * ens.x_terminal.var(ddof=1))
    assert principal_samples(ens, p0).mean() == pytest.approx(direct, abs=1e-12)


def test_reservation_and_principal_at_reference(p0, solved, equilibrium_ensemble):
    coeffs, pol, _, _ = solved
    assert agent_value(equilibrium_ensemble, p0).within(-1.0)
    assert principal_value(equilibrium_ensemble, p0).within(predicted_principal_value(coeffs, p0, pol.y0))


def test_trivial_deviation_grid(p0, solved):
    coeffs, pol, agent, flow = solved
    rep = ic_verify(p0, coeffs, pol, agent, flow, SMALL, deviations=[(0.0, 0.0)])
    assert rep.passed
    assert rep.deviations[0].gap == 0.0 and rep.deviations[0].gap_se == 0.0
    with pytest.raises(ValueError):
        ic_verify(p0, coeffs, pol, agent, flow, SMALL, deviations=[])


def test_corrupted_exposure_is_detected(p0, solved):
    coeffs, pol, agent, flow = solved
    # the agent best-responds to Z + 0.3 while the contract pays the optimal Z
    bad = equilibrium_agent_policy(type(pol)(pol.y0, lambda t: pol.z_of_t(t) + 0.3, pol.u_of_t), p0)
    rep = ic_verify(p0, coeffs, pol, bad, flow, SMALL)
    assert not rep.envelope_passed
    assert rep.optimal_value.mean < rep.reservation
    assert not rep.passed


def test_martingale_verdicts(p0, solved, equilibrium_ensemble, big_cfg):
    coeffs, pol, agent, flow = solved
    eq = martingale_check(equilibrium_ensemble, p0)
    assert eq.martingale and eq.verdict(True)
    dev = martingale_check(simulate_deviation(p0, coeffs, pol, agent.shifted(0.5, 0.0), flow, big_cfg), p0)
    assert dev.submartingale and not dev.martingale
    assert np.max(dev.increments / dev.std_errors) > 3


def test_moment_comparison_table(solved, equilibrium_ensemble):
    rows = moment_comparison(equilibrium_ensemble, solved[3])
    assert len(rows) == 21
    assert rows["t"][0] == 0.0 and rows["z_m"][0] == 0.0
    assert np.all(np.abs(rows["z_m"]) <= 3) and np.all(np.abs(rows["z_v"]) <= 3)
