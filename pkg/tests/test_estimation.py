"""Tests for the batch least-squares layer.

Every closed-form quantity is checked against a brute-force loop or an
explicit inverse computed independently of the library code.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rankreduce.estimation import (
    DEFAULT_RIDGE_SCALE,
    Correlation,
    NumericalError,
    ReducedCorrelation,
    SampleHistory,
    accumulate_correlation,
    alternating_ls,
    batch_projection,
    batch_reduced_weights,
    hermitize,
    ls_cost,
    reduce_correlation,
    ses,
    truncation_basis,
)


def random_history(seed, n=40, dim=6, lam=0.9):
    rng = np.random.default_rng(seed)
    obs = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    des = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return SampleHistory(observations=obs, desired=des, lam=lam)


def test_history_rejects_mismatched_desired():
    obs = np.zeros((4, 3))
    with pytest.raises(ValueError, match="length-4"):
        SampleHistory(observations=obs, desired=np.zeros(5))


def test_history_rejects_bad_forgetting():
    obs = np.zeros((2, 2))
    for lam in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError, match="forgetting"):
            SampleHistory(observations=obs, desired=np.zeros(2), lam=lam)


def test_history_rejects_non_finite():
    obs = np.zeros((2, 2))
    obs[1, 1] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        SampleHistory(observations=obs, desired=np.zeros(2))


def test_history_rejects_empty():
    with pytest.raises(ValueError, match="non-empty"):
        SampleHistory(observations=np.zeros((0, 3)), desired=np.zeros(0))


def test_history_weights_newest_sample_has_weight_one():
    hist = SampleHistory(observations=np.zeros((4, 1)), desired=np.zeros(4), lam=0.5)
    assert_allclose(hist.weights(), [0.125, 0.25, 0.5, 1.0], rtol=0, atol=0)


def test_hermitize_returns_hermitian_part():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    h = hermitize(a)
    assert_allclose(h, h.conj().T, rtol=0, atol=0)
    assert_allclose(hermitize(h), h, rtol=0, atol=0)


def test_truncation_basis_is_identity_over_zeros():
    basis = truncation_basis(5, 2)
    assert basis.shape == (5, 2)
    assert_allclose(basis[:2], np.eye(2), rtol=0, atol=0)
    assert_allclose(basis[2:], 0, rtol=0, atol=0)


@pytest.mark.parametrize("rank", [0, 6])
def test_truncation_basis_rejects_bad_rank(rank):
    with pytest.raises(ValueError, match="rank"):
        truncation_basis(5, rank)


def test_accumulate_correlation_matches_loop():
    hist = random_history(3)
    corr = accumulate_correlation(hist)
    n = hist.n_samples
    R = np.zeros((hist.dim, hist.dim), dtype=np.complex128)
    p = np.zeros(hist.dim, dtype=np.complex128)
    s2 = 0.0
    for l in range(n):
        w = hist.lam ** (n - 1 - l)
        r = hist.observations[l]
        d = hist.desired[l]
        R += w * np.outer(r, r.conj())
        p += w * np.conj(d) * r
        s2 += w * abs(d) ** 2
    assert_allclose(corr.R, hermitize(R), rtol=0, atol=1e-12)
    assert_allclose(corr.p, p, rtol=0, atol=1e-12)
    assert corr.sigma2_d == pytest.approx(s2, rel=1e-12)
    assert_allclose(corr.R, corr.R.conj().T, rtol=0, atol=0)


def test_batch_reduced_weights_solves_projected_normal_equations():
    hist = random_history(7)
    corr = accumulate_correlation(hist)
    S = np.linalg.qr(
        np.random.default_rng(8).standard_normal((hist.dim, 3))
        + 1j * np.random.default_rng(9).standard_normal((hist.dim, 3))
    )[0]
    ridge = 1e-3
    w = batch_reduced_weights(S, corr, ridge=ridge)
    R_red = hermitize(S.conj().T @ corr.R @ S)
    expected = np.linalg.inv(R_red + ridge * np.eye(3)) @ (S.conj().T @ corr.p)
    assert_allclose(w, expected, rtol=0, atol=1e-10)


def test_batch_reduced_weights_default_ridge_is_relative():
    hist = random_history(11)
    corr = accumulate_correlation(hist)
    S = truncation_basis(hist.dim, 2)
    R_red = hermitize(S.conj().T @ corr.R @ S)
    rid = DEFAULT_RIDGE_SCALE * float(np.mean(R_red.diagonal().real))
    assert_allclose(
        batch_reduced_weights(S, corr),
        batch_reduced_weights(S, corr, ridge=rid),
        rtol=0,
        atol=0,
    )


def test_batch_reduced_weights_singular_without_ridge():
    corr = Correlation(R=np.zeros((3, 3)), p=np.zeros(3), sigma2_d=1.0)
    with pytest.raises(NumericalError, match="singular"):
        batch_reduced_weights(truncation_basis(3, 2), corr, ridge=0.0)


def test_batch_reduced_weights_rejects_bad_projection_shape():
    hist = random_history(12)
    corr = accumulate_correlation(hist)
    with pytest.raises(ValueError, match="projection"):
        batch_reduced_weights(np.zeros((hist.dim + 1, 2)), corr)


def test_batch_projection_matches_explicit_inverses():
    rng = np.random.default_rng(21)
    dim, rank = 6, 2
    A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    R = hermitize(A @ A.conj().T) + dim * np.eye(dim)
    B = rng.standard_normal((rank, rank)) + 1j * rng.standard_normal((rank, rank))
    Rw = hermitize(B @ B.conj().T) + rank * np.eye(rank)
    cross = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    corr = Correlation(R=R, p=np.zeros(dim), sigma2_d=0.0)
    red = ReducedCorrelation(R=Rw, p=np.zeros(rank), cross=cross, weight_corr=Rw)
    ridge = 1e-4
    S = batch_projection(corr, red, ridge=ridge)
    expected = (
        np.linalg.inv(R + ridge * np.eye(dim))
        @ cross
        @ np.linalg.inv(Rw + ridge * np.eye(rank))
    )
    assert_allclose(S, expected, rtol=0, atol=1e-10)


def test_batch_projection_guards_singular_weight_correlation():
    dim, rank = 4, 2
    corr = Correlation(R=np.eye(dim), p=np.zeros(dim), sigma2_d=0.0)
    w = np.array([1.0, 0.0])
    red = ReducedCorrelation(
        R=np.eye(rank),
        p=np.zeros(rank),
        cross=np.ones((dim, rank)),
        weight_corr=np.outer(w, w.conj()),
    )
    with pytest.raises(NumericalError, match="singular"):
        batch_projection(corr, red, ridge=0.0)


def test_reduce_correlation_builds_rank_one_statistics():
    hist = random_history(31)
    corr = accumulate_correlation(hist)
    S = truncation_basis(hist.dim, 2)
    w = np.array([1.0 + 1j, -2.0])
    red = reduce_correlation(S, corr, w)
    assert_allclose(red.R, hermitize(S.conj().T @ corr.R @ S), rtol=0, atol=0)
    assert_allclose(red.p, S.conj().T @ corr.p, rtol=0, atol=0)
    assert_allclose(red.cross, np.outer(corr.p, w.conj()), rtol=0, atol=0)
    assert_allclose(red.weight_corr, np.outer(w, w.conj()), rtol=0, atol=0)


def test_ses_equals_residual_power_of_optimal_filter():
    hist = random_history(41, n=200, dim=4, lam=1.0)
    corr = accumulate_correlation(hist)
    S = np.eye(hist.dim, dtype=np.complex128)
    red = reduce_correlation(S, corr, np.zeros(hist.dim))
    value = ses(red, corr.sigma2_d)
    w_opt = np.linalg.solve(corr.R, corr.p)
    direct = ls_cost(hist, S, w_opt)
    assert value == pytest.approx(direct, rel=1e-9)
    assert value >= 0.0


def test_ls_cost_matches_brute_sum():
    hist = random_history(51)
    rng = np.random.default_rng(52)
    S = rng.standard_normal((hist.dim, 2)) + 1j * rng.standard_normal((hist.dim, 2))
    w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    effective = S @ w
    total = 0.0
    n = hist.n_samples
    for l in range(n):
        err = hist.desired[l] - effective.conj() @ hist.observations[l]
        total += hist.lam ** (n - 1 - l) * abs(err) ** 2
    assert ls_cost(hist, S, w) == pytest.approx(total, rel=1e-12)


@pytest.mark.parametrize("seed", [11, 23, 47, 90, 105])
def test_alternating_ls_descends_to_dense_optimum(seed):
    hist = random_history(seed, n=100, dim=16, lam=0.97)
    S, w, trace = alternating_ls(hist, rank=3, iters=10)
    assert S.shape == (16, 3)
    assert w.shape == (3,)
    diffs = np.diff(trace)
    scale = max(trace)
    assert diffs.max() <= 1e-9 * scale
    corr = accumulate_correlation(hist)
    wt = hist.weights()
    w_dense = np.linalg.solve(corr.R, corr.p)
    dense_cost = float(
        wt @ np.abs(hist.desired - hist.observations @ w_dense.conj()) ** 2
    )
    assert trace[-1] == pytest.approx(dense_cost, rel=1e-6)


def test_alternating_ls_validates_arguments():
    hist = random_history(61)
    with pytest.raises(ValueError, match="iters"):
        alternating_ls(hist, rank=2, iters=0)
    with pytest.raises(ValueError, match="init"):
        alternating_ls(hist, rank=2, iters=1, init=np.zeros((3, 3)))
