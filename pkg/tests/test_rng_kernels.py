import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from mfcontract import kernels
from mfcontract.errors import NonFiniteState
from mfcontract.rng import BLOCK_SIZE, blocks, draw_block, poisson_cdf_tables, poisson_inverse


def test_blocks_cover_range():
    spans = list(blocks(2 * BLOCK_SIZE + 5))
    assert spans == [(0, 0, BLOCK_SIZE), (1, BLOCK_SIZE, 2 * BLOCK_SIZE), (2, 2 * BLOCK_SIZE, 2 * BLOCK_SIZE + 5)]


def test_draws_depend_only_on_seed_and_block():
    a = draw_block(7, 3, 100, 10, 2)
    b = draw_block(7, 3, 100, 10, 2)
    c = draw_block(7, 4, 100, 10, 2)
    np.testing.assert_array_equal(a[1], b[1])
    np.testing.assert_array_equal(a[2][1], b[2][1])
    assert not np.array_equal(a[1], c[1])
    # adding a uniform stream leaves the earlier draws untouched
    one = draw_block(7, 3, 100, 10, 1)
    np.testing.assert_array_equal(one[2][0], a[2][0])


def test_antithetic_rows_mirror():
    z0, g, (u,) = draw_block(1, 0, 9, 4, 1, antithetic=True)
    np.testing.assert_array_equal(g[1::2], -g[0:8:2])
    np.testing.assert_array_equal(z0[1::2], -z0[0:8:2])
    np.testing.assert_allclose(u[1::2] + u[0:8:2], 1.0, atol=1e-15)


@given(st.lists(st.floats(0, 30), min_size=1, max_size=5))
def test_poisson_tables_are_cdfs(mu):
    tab = poisson_cdf_tables(mu)
    assert np.all(np.diff(tab, axis=1) >= 0)
    assert np.all(tab[:, -1] == 1.0)
    for row, m in zip(tab, mu):
        assert row[0] == pytest.approx(math.exp(-m), rel=1e-12)


def test_poisson_tables_reject_bad_means():
    with pytest.raises(ValueError):
        poisson_cdf_tables([-1.0])
    with pytest.raises(ValueError):
        poisson_cdf_tables([np.nan])


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 20), st.floats(0, 5))
def test_inverse_is_monotone_in_mean(u, mu, extra):
    assert poisson_inverse(u, mu) <= poisson_inverse(u, mu + extra)


def test_inverse_distribution():
    rng = np.random.default_rng(0)
    u = rng.random(200_000)
    counts = poisson_inverse(u, 1.7)
    k = np.arange(8)
    observed = np.array([np.sum(counts == i) for i in k[:-1]] + [np.sum(counts >= 7)])
    expected = np.append(stats.poisson.pmf(k[:-1], 1.7), stats.poisson.sf(6, 1.7)) * u.size
    assert stats.chisquare(observed, expected).pvalue > 0.01


def _kernel_args(n=50, n_steps=20, seed=3, bad=False):
    z0, g, (u,) = draw_block(seed, 0, n, n_steps, 1)
    dt = 1.0 / n_steps
    rng = np.random.default_rng(seed)
    mu = rng.uniform(0, 0.5, n_steps)
    if bad:
        mu[5] = 0.0
    v = lambda: np.ascontiguousarray(rng.normal(size=n_steps))
    hdt = v()
    if bad:
        hdt[5] = np.inf
    return (g, u, np.zeros(n), 0.1, poisson_cdf_tables(mu), v() * dt, v(), v() * dt, v(), hdt,
            np.abs(v()) * dt, v(), 0.5 * math.sqrt(dt), dt, 0.0, 0.2, 0.0, 0.0, np.array([0, 10, 20]))


@pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")
def test_backends_bit_identical():
    args = _kernel_args()
    a = kernels.simulate_block(*args, backend="compiled")
    b = kernels.simulate_block(*args, backend="python")
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_kernel_reports_non_finite_state(backend):
    with pytest.raises(NonFiniteState) as exc:
        kernels.simulate_block(*_kernel_args(bad=True), backend=backend)
    assert exc.value.step == 5 and exc.value.path == 0


def test_backend_selection():
    before = kernels.active_backend()
    try:
        kernels.set_backend("python")
        assert kernels.active_backend() == "python"
        with pytest.raises(ValueError):
            kernels.set_backend("gpu")
    finally:
        kernels.set_backend(before)
