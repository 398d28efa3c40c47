import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from spillover.errors import EmptyInput, InvalidDegreesOfFreedom, NotPositiveDefinite, NotSymmetric
from spillover.linalg import (
    RngStream,
    cholesky,
    kronecker,
    quantiles,
    sample_inverse_wishart,
    sample_matrix_normal,
    spectral_radius,
)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_hand_example():
    m = np.array([[4.0, 2.0], [2.0, 3.0]])
    low = cholesky(m)
    np.testing.assert_allclose(low, [[2, 0], [1, np.sqrt(2)]], atol=1e-15)
    np.testing.assert_allclose(low @ low.T, m, atol=1e-10)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky([[1.0, 2.0], [2.0, 1.0]])


def test_cholesky_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        cholesky([[1.0, 0.5], [0.4, 1.0]])


def test_cholesky_absorbs_roundoff_asymmetry():
    m = np.array([[2.0, 1.0], [1.0 + 1e-13, 2.0]])
    low = cholesky(m)
    np.testing.assert_allclose(low @ low.T, 0.5 * (m + m.T), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 4), elements=finite), arrays(float, 4, elements=st.floats(0.1, 3)))
def test_cholesky_round_trip(entries, diag):
    low = np.tril(entries, -1) + np.diag(diag)
    np.testing.assert_allclose(cholesky(low @ low.T), low, atol=1e-9)


def test_kronecker_examples():
    np.testing.assert_array_equal(kronecker(np.eye(2), np.eye(2)), np.eye(4))
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    expected = np.block([[a[0, 0] * b, a[0, 1] * b], [a[1, 0] * b, a[1, 1] * b]])
    np.testing.assert_array_equal(kronecker(a, b), expected)
    np.testing.assert_array_equal(kronecker(a, [[2.5]]), 2.5 * a)


@given(*(arrays(float, (2, 2), elements=finite) for _ in range(4)))
def test_kronecker_mixed_product(a, b, c, d):
    lhs = kronecker(a, b) @ kronecker(c, d)
    np.testing.assert_allclose(lhs, kronecker(a @ c, b @ d), atol=1e-10)


def test_matrix_normal_degenerate_covariance_returns_mean():
    mean = np.arange(6.0).reshape(3, 2)
    draw = sample_matrix_normal(mean, 1e-30 * np.eye(3), 1e-30 * np.eye(2), RngStream(1))
    np.testing.assert_allclose(draw, mean, atol=1e-10)


def test_matrix_normal_monte_carlo_mean():
    rng = RngStream(7)
    draws = np.stack([sample_matrix_normal(np.zeros((2, 2)), np.eye(2), np.eye(2), rng) for _ in range(100_000)])
    assert np.max(np.abs(draws.mean(axis=0))) < 0.02


def test_matrix_normal_covariance_is_kronecker():
    row = np.array([[1.0, 0.3], [0.3, 2.0]])
    col = np.array([[0.5, -0.1], [-0.1, 1.0]])
    rng = RngStream(3)
    draws = np.stack([sample_matrix_normal(np.zeros((2, 2)), row, col, rng) for _ in range(40_000)])
    vecs = draws.transpose(0, 2, 1).reshape(len(draws), -1)  # column-stacked vec
    np.testing.assert_allclose(np.cov(vecs.T), np.kron(col, row), atol=0.05)


def test_matrix_normal_deterministic():
    args = (np.zeros((3, 2)), np.eye(3), np.eye(2))
    np.testing.assert_array_equal(sample_matrix_normal(*args, RngStream(5)), sample_matrix_normal(*args, RngStream(5)))


def test_rng_stream_position_addressable():
    s = RngStream(11)
    first = s.standard_normal(3)
    second = s.standard_normal(3)
    assert not np.array_equal(first, second)
    np.testing.assert_array_equal(RngStream(11, position=1).standard_normal(3), second)
    assert not np.array_equal(s.spawn(0).standard_normal(3), s.spawn(1).standard_normal(3))


def test_inverse_wishart_scalar_oracle():
    s, nu, n = 2.0, 8.0, 40_000
    rng = RngStream(2)
    draws = np.array([sample_inverse_wishart([[s]], nu, rng)[0, 0] for _ in range(n)])
    # s / chi2_nu has mean s / (nu - 2)
    mc_se = draws.std(ddof=1) / np.sqrt(n)
    assert abs(draws.mean() - s / (nu - 2)) < 3 * mc_se
    ks = stats.kstest(s / draws, "chi2", args=(nu,))
    assert ks.pvalue > 1e-3


def test_inverse_wishart_matrix_mean_matches_scipy():
    scale = np.array([[2.0, 0.4, 0.0], [0.4, 1.0, 0.2], [0.0, 0.2, 1.5]])
    nu = 12
    rng = RngStream(4)
    draws = np.stack([sample_inverse_wishart(scale, nu, rng) for _ in range(20_000)])
    ref = stats.invwishart(df=nu, scale=scale).rvs(20_000, random_state=0)
    np.testing.assert_allclose(draws.mean(axis=0), scale / (nu - 3 - 1), atol=0.01)
    np.testing.assert_allclose(draws.std(axis=0), ref.std(axis=0), rtol=0.08)


def test_inverse_wishart_rejects_bad_dof():
    with pytest.raises(InvalidDegreesOfFreedom):
        sample_inverse_wishart(np.eye(3), 2, RngStream(0))


def test_inverse_wishart_draws_are_spd():
    rng = RngStream(9)
    for _ in range(50):
        w = sample_inverse_wishart(np.eye(4), 4.5, rng)
        np.testing.assert_array_equal(w, w.T)
        cholesky(w)


def test_quantile_examples():
    assert quantiles([1, 2, 3], 0.5) == 2
    assert quantiles([1, 2, 3, 4], 0.5) == 2.5
    v = [5.0, -1.0, 3.5, 2.0]
    np.testing.assert_array_equal(quantiles(v, [0, 1]), [min(v), max(v)])


def test_quantiles_empty():
    with pytest.raises(EmptyInput):
        quantiles([], 0.5)


@given(arrays(float, st.integers(1, 30), elements=finite), st.lists(st.floats(0, 1), min_size=2, max_size=6))
def test_quantiles_monotone(values, probs):
    probs = sorted(probs)
    q = quantiles(values, probs)
    assert np.all(np.diff(q) >= -1e-12)


def test_spectral_radius():
    assert spectral_radius(np.zeros((3, 3))) == 0
    assert spectral_radius([[0.5]]) == pytest.approx(0.5)
    assert spectral_radius([[0.0, 1.0], [-1.0, 0.0]]) == pytest.approx(1.0)
