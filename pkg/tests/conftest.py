import math

import numpy as np
import pytest

from ridgesdr.model import RidgeModel, init_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_model(seed, n=4, M=8, R=2.0, gamma=math.inf):
    return init_model(n, M, R, gamma=gamma, seed=seed)


def single_unit(n, R=1.0, gamma=math.inf, b=0.0, c=1.0, axis=0):
    a = np.zeros((1, n))
    a[0, axis] = 1.0
    return RidgeModel(a, [b], [c], R=R, gamma=gamma)


def random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def smooth_target(n, seed):
    """Smooth vectorised target built from an unrelated ridge sum plus a quadratic."""
    r = np.random.default_rng(seed)
    A = r.standard_normal((3, n))
    w = r.standard_normal(3)

    def f(X):
        X = np.atleast_2d(X)
        return np.sin(X @ A.T) @ w + 0.3 * np.sum(X * X, axis=1)

    return f


def random_context(seed, n=4, M=8, K=60, L=80, gamma=math.inf, lam=None):
    """Objective context with non-trivial anchors from an unrelated previous model."""
    from ridgesdr.objective import make_context
    from ridgesdr.sampling import sample_cutoff, sample_gaussian

    r = np.random.default_rng(seed)
    R = 2.0
    gb = sample_gaussian(n, K, seed + 1)
    cb = sample_cutoff(n, L, gamma, R, seed + 2)
    prev = init_model(n, M, R, gamma=gamma, seed=seed + 3)
    U = random_orthogonal(r, n)[:, :2]
    lam = float(r.uniform(0.1, 2.0)) if lam is None else lam
    ctx = make_context(smooth_target(n, seed + 4), gb, cb, lam, prev, U @ U.T)
    model = init_model(n, M, R, gamma=gamma, seed=seed + 5)
    return model, ctx


def fd_gradient(fun, theta, h=1e-6):
    g = np.empty_like(theta)
    for j in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        g[j] = (fun(tp) - fun(tm)) / (2 * h)
    return g


def max_relative_error(analytic, numeric, floor=1e-3):
    """Coordinate-wise relative error; the denominator is floored at floor * max|numeric|."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor * np.max(np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / scale))


ACCEPTANCE_LINES = []


def report(number, title, passed, detail, seconds):
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail} [{seconds:.1f}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
