"""Moment matrices, symmetric eigendecomposition and top-k projectors."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import effective_gradient

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
ZERO_SPECTRUM = 1e-12


def symmetrize(M):
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def estimate_moment(model, cutoff_batch):
    """(1/L) sum g(z_i) g(z_i)^T over the cutoff samples, symmetrised."""
    G = effective_gradient(model, cutoff_batch.points)
    return symmetrize(G.T @ G / G.shape[0])


def second_moment(points, weights=None):
    """Empirical (1/N) sum w_i x_i x_i^T of a weighted point cloud."""
    X = np.asarray(points, dtype=float)
    w = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    return symmetrize((X * w[:, None]).T @ X / X.shape[0])


def _check_symmetric(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, np.linalg.norm(M))
    if np.linalg.norm(M - M.T) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    return symmetrize(M)


def _jacobi(A, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    A = A.copy()
    n = A.shape[0]
    V = np.eye(n)
    norm = np.linalg.norm(A)
    if norm == 0.0:
        return np.diag(A).copy(), V
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off < tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                diff = A[q, q] - A[p, p]
                if abs(apq) <= 1e-18 * (abs(A[p, p]) + abs(A[q, q])) or abs(apq) < 1e-300:
                    A[p, q] = A[q, p] = 0.0
                    continue
                if abs(apq) < 1e-18 * abs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        warnings.warn("Jacobi iteration hit the sweep limit before converging", RuntimeWarning)
    return np.diag(A).copy(), V


def sym_eigen(M):
    """Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in descending order (stable for ties) and each
    eigenvector column is signed so its largest-magnitude entry is positive,
    the lowest index winning ties.
    """
    A = _check_symmetric(M)
    w, V = _jacobi(A)
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return w, V


@dataclass(frozen=True)
class Projector:
    matrix: np.ndarray
    k: int
    eigenvalues: np.ndarray
    gap: float
    degenerate: bool = False

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def _check_k(k, n):
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")


def top_k_projector(M, k):
    """Orthogonal projector onto the span of the top-k eigenvectors of M.

    When every eigenvalue is below 1e-12 the subspace is undefined; the
    projector onto the first k coordinate axes is returned and flagged as
    degenerate.
    """
    w, V = sym_eigen(M)
    n = w.shape[0]
    _check_k(k, n)
    gap = float(w[k - 1] - w[k]) if k < n else float(w[k - 1])
    if np.all(np.abs(w) < ZERO_SPECTRUM):
        P = np.diag([1.0] * k + [0.0] * (n - k))
        return Projector(P, k, w, gap, degenerate=True)
    U = V[:, :k]
    return Projector(symmetrize(U @ U.T), k, w, gap)


def rank_penalty(M, k):
    """Sum of the trailing n-k eigenvalues of M."""
    w, _ = sym_eigen(M)
    _check_k(k, w.shape[0])
    return float(np.sum(w[k:]))


def subspace_accuracy(P, P_true):
    """Frobenius distance between two projectors."""
    P, P_true = np.asarray(P, dtype=float), np.asarray(P_true, dtype=float)
    if P.shape != P_true.shape:
        raise ValueError(f"shape mismatch {P.shape} vs {P_true.shape}")
    return float(np.linalg.norm(P - P_true))


def coordinate_projector(n, axes):
    """Projector onto the span of the given coordinate axes (0-based)."""
    d = np.zeros(n)
    d[list(axes)] = 1.0
    return np.diag(d)


def save_matrix_csv(M, path):
    np.savetxt(path, np.asarray(M, dtype=float), delimiter=",", fmt="%.17g")
