import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from ridgesdr.model import RidgeModel, init_model
from ridgesdr.sampling import sample_cutoff
from ridgesdr.spectral import (coordinate_projector, estimate_moment, rank_penalty, save_matrix_csv,
                               second_moment, subspace_accuracy, sym_eigen, top_k_projector)

from conftest import random_orthogonal


def random_psd(rng, n, rank=None):
    B = rng.standard_normal((n, rank or n))
    return B @ B.T


def test_zero_model_moment():
    m = init_model(3, 4, 1.0, seed=1).zeroed()
    cb = sample_cutoff(3, 100, math.inf, 1.0, 2)
    assert np.all(estimate_moment(m, cb) == 0.0)


def test_single_axis_model_moment():
    m = RidgeModel(np.array([[1.0, 0.0, 0.0]]), [0.2], [1.5], R=1.0)
    Mh = estimate_moment(m, sample_cutoff(3, 500, math.inf, 1.0, 3))
    assert Mh[0, 0] > 0
    Mh[0, 0] = 0.0
    assert np.all(Mh == 0.0)


def test_moment_matches_disk_quadrature():
    m = RidgeModel(np.array([[1.0, 0.0]]), [0.0], [1.0], R=1.0)
    cb = sample_cutoff(2, 1_000_000, math.inf, 1.0, 17)
    g1sq = (1.0 - np.tanh(cb.points[:, 0]) ** 2) ** 2
    est = estimate_moment(m, cb)[0, 0]
    se = g1sq.std(ddof=1) / math.sqrt(g1sq.size)
    # integrate over the disk as a strip of chords, then normalise by the disk area
    exact = integrate.quad(lambda x: (1 - math.tanh(x) ** 2) ** 2 * 2 * math.sqrt(1 - x * x), -1, 1,
                           epsabs=1e-13)[0] / math.pi
    assert abs(est - exact) < 3 * se


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), finite=st.booleans())
def test_moment_is_psd(seed, finite):
    gamma = 1.5 if finite else math.inf
    m = init_model(4, 6, 2.0, gamma=gamma, seed=seed)
    Mh = estimate_moment(m, sample_cutoff(4, 200, gamma, 2.0, seed + 1))
    assert np.array_equal(Mh, Mh.T)
    assert np.linalg.eigvalsh(Mh).min() >= -1e-10 * np.trace(Mh)


def test_diag_eigen():
    w, V = sym_eigen(np.diag([1.0, 3.0, 2.0]))
    np.testing.assert_array_equal(w, [3.0, 2.0, 1.0])
    np.testing.assert_array_equal(V, np.eye(3)[:, [1, 2, 0]])


def test_identity_is_deterministic():
    w, V = sym_eigen(np.eye(4))
    np.testing.assert_array_equal(w, np.ones(4))
    np.testing.assert_array_equal(V, np.eye(4))


def test_sign_convention():
    rng = np.random.default_rng(3)
    _, V = sym_eigen(random_psd(rng, 6))
    for j in range(6):
        i = int(np.argmax(np.abs(V[:, j])))
        assert V[i, j] > 0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(1, 12))
def test_eigen_against_reconstruction_and_numpy(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    M = A + A.T
    w, V = sym_eigen(M)
    scale = np.linalg.norm(M)
    assert np.linalg.norm(V @ np.diag(w) @ V.T - M) < 1e-8 * scale
    assert np.linalg.norm(M @ V - V * w) < 1e-8 * scale
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
    assert np.all(np.diff(w) <= 0)
    np.testing.assert_allclose(w, np.sort(np.linalg.eigvalsh(M))[::-1], atol=1e-10 * max(scale, 1))


def test_eigen_handles_wide_dynamic_range():
    M = np.diag([1e12, 1.0, 1e-12]) + 1e-3 * np.ones((3, 3))
    w, V = sym_eigen(M)
    assert np.linalg.norm(M @ V - V * w) < 1e-8 * np.linalg.norm(M)


def test_eigen_rejects_non_symmetric():
    with pytest.raises(ValueError):
        sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        sym_eigen(np.ones((2, 3)))


def test_top_k_diag():
    P = top_k_projector(np.diag([3.0, 2.0, 1.0]), 2)
    np.testing.assert_array_equal(P.matrix, np.diag([1.0, 1.0, 0.0]))
    assert P.gap == 1.0 and not P.degenerate
    np.testing.assert_allclose(top_k_projector(np.diag([3.0, 2.0, 1.0]), 3).matrix, np.eye(3), atol=1e-15)


def test_top_k_conjugated_diagonal():
    rng = np.random.default_rng(5)
    for n in range(2, 9):
        Q = random_orthogonal(rng, n)
        d = np.sort(rng.uniform(0.1, 5.0, n))[::-1]
        d[1:] = np.minimum(d[1:], d[:-1] - 0.05)
        for k in range(1, n):
            expected = Q[:, :k] @ Q[:, :k].T
            got = top_k_projector(Q @ np.diag(d) @ Q.T, k).matrix
            assert np.linalg.norm(got - expected) < 1e-8


def test_top_k_rejects_bad_k():
    with pytest.raises(ValueError):
        top_k_projector(np.eye(3), 0)
    with pytest.raises(ValueError):
        top_k_projector(np.eye(3), 4)


def test_zero_spectrum_is_flagged():
    P = top_k_projector(np.zeros((4, 4)), 2)
    assert P.degenerate
    np.testing.assert_array_equal(P.matrix, coordinate_projector(4, [0, 1]))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 8), data=st.data())
def test_projector_invariants(seed, n, data):
    k = data.draw(st.integers(1, n))
    P = top_k_projector(random_psd(np.random.default_rng(seed), n), k).matrix
    assert np.array_equal(P, P.T)
    assert np.linalg.norm(P @ P - P) < 1e-8
    assert abs(np.trace(P) - k) < 1e-8


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 8), data=st.data())
def test_rotation_equivariance(seed, n, data):
    k = data.draw(st.integers(1, n - 1))
    rng = np.random.default_rng(seed)
    M = random_psd(rng, n)
    w = np.linalg.eigvalsh(M)[::-1]
    if w[k - 1] - w[k] <= 1e-6 * np.linalg.norm(M):
        return
    Q = random_orthogonal(rng, n)
    lhs = top_k_projector(Q @ M @ Q.T, k).matrix
    rhs = Q @ top_k_projector(M, k).matrix @ Q.T
    assert np.linalg.norm(lhs - rhs) < 1e-8


def test_rank_penalty_examples():
    assert rank_penalty(np.diag([3.0, 2.0, 1.0]), 2) == pytest.approx(1.0, abs=1e-15)
    rng = np.random.default_rng(1)
    for k in (1, 2, 3):
        M = random_psd(rng, 5, rank=k)
        assert abs(rank_penalty(M, k)) < 1e-10 * np.trace(M)


def eckart_young_oracle(M, k):
    """min over rank-<=k X of ||M^(1/2) - X||_F^2 by truncating the SVD of M^(1/2)."""
    w, V = np.linalg.eigh(M)
    root = (V * np.sqrt(np.clip(w, 0, None))) @ V.T
    U, s, Vt = np.linalg.svd(root)
    X = (U[:, :k] * s[:k]) @ Vt[:k]
    return float(np.linalg.norm(root - X) ** 2)


def test_rank_penalty_matches_svd_truncation():
    rng = np.random.default_rng(9)
    for _ in range(20):
        M = random_psd(rng, 3)
        assert rank_penalty(M, 1) == pytest.approx(eckart_young_oracle(M, 1), abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 8))
def test_rank_penalty_monotone_in_k(seed, n):
    M = random_psd(np.random.default_rng(seed), n)
    vals = [rank_penalty(M, k) for k in range(1, n + 1)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1]) < 1e-12 * np.trace(M)


def test_accuracy_examples():
    P12, P34 = coordinate_projector(4, [0, 1]), coordinate_projector(4, [2, 3])
    assert subspace_accuracy(P12, P12) == 0.0
    assert subspace_accuracy(P12, P34) == pytest.approx(2.0, abs=1e-15)
    assert subspace_accuracy(np.zeros((4, 4)), P12) == pytest.approx(math.sqrt(2), abs=1e-15)
    with pytest.raises(ValueError):
        subspace_accuracy(np.eye(3), np.eye(4))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_accuracy_bounds(seed):
    rng = np.random.default_rng(seed)
    P = top_k_projector(random_psd(rng, 4), 2).matrix
    acc = subspace_accuracy(P, coordinate_projector(4, [0, 1]))
    assert 0.0 <= acc <= 2.0 + 1e-12


def test_planar_measure_gives_rank_two_moment():
    rng = np.random.default_rng(4)
    Z = rng.standard_normal((2000, 5))
    Z[:, 2:] = 0.0
    S = second_moment(Z)
    w, _ = sym_eigen(S)
    assert np.all(np.abs(w[2:]) < 1e-10 * np.trace(S))
    # a full-rank cloud does not pass
    w_full, _ = sym_eigen(second_moment(rng.standard_normal((2000, 5))))
    assert w_full[-1] > 0.5


def test_planar_gradient_field_gives_rank_two_moment():
    m = init_model(5, 7, 3.0, seed=5)
    a = m.a.copy()
    a[:, 2:] = 0.0
    m = m.with_params(a=a)
    Mh = estimate_moment(m, sample_cutoff(5, 2000, math.inf, 3.0, 6))
    w, _ = sym_eigen(Mh)
    assert np.all(np.abs(w[2:]) < 1e-10 * np.trace(Mh))


def test_matrix_csv(tmp_path):
    M = random_psd(np.random.default_rng(0), 3)
    save_matrix_csv(M, tmp_path / "m.csv")
    assert np.array_equal(np.loadtxt(tmp_path / "m.csv", delimiter=","), M)
