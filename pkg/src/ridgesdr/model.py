"""Cutoff ridge networks: sigma(gamma*(R - |x|)) * sum_i c_i psi(a_i.x - b_i).

All evaluation routines are vectorised over a batch of points ``X`` of shape
``(N, n)``; a single point of shape ``(n,)`` is accepted as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Activation:
    """A smooth scalar nonlinearity with its first two derivatives."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    sup: float  # sup |f|, used for the amplitude bound
    fused: Callable[[np.ndarray], tuple] | None = None

    def all(self, u, out=None):
        """(f, f', f'') at u, sharing work when a fused form exists.

        ``out`` may supply three preallocated arrays shaped like ``u``.
        """
        if self.fused is not None:
            return self.fused(u, out)
        if out is None:
            return self.f(u), self.d1(u), self.d2(u)
        out[0][...], out[1][...], out[2][...] = self.f(u), self.d1(u), self.d2(u)
        return out


def _tanh_d1(u):
    t = np.tanh(u)
    return 1.0 - t * t


def _tanh_d2(u):
    t = np.tanh(u)
    return -2.0 * t * (1.0 - t * t)


def _tanh_fused(u, out=None):
    t, d1, d2 = out if out is not None else (np.empty_like(u), np.empty_like(u), np.empty_like(u))
    np.tanh(u, out=t)
    np.multiply(t, t, out=d1)
    np.subtract(1.0, d1, out=d1)
    np.multiply(t, d1, out=d2)
    d2 *= -2.0
    return t, d1, d2


def _logistic(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _logistic_d1(u):
    s = _logistic(u)
    return s * (1.0 - s)


def _logistic_d2(u):
    s = _logistic(u)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


ACTIVATIONS = {
    "tanh": Activation("tanh", np.tanh, _tanh_d1, _tanh_d2, 1.0, _tanh_fused),
    "logistic": Activation("logistic", _logistic, _logistic_d1, _logistic_d2, 1.0),
}


def get_activation(name):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}") from None


def sigmoid(u):
    # tanh form avoids overflow warnings for large |u|
    return 0.5 * (1.0 + np.tanh(0.5 * u))


@dataclass(frozen=True)
class RidgeModel:
    """Immutable parameter set of a cutoff ridge network.

    ``a`` has shape ``(M, n)``; ``b`` and ``c`` have shape ``(M,)``.
    ``gamma = inf`` turns the sigmoid cutoff into the indicator of the
    closed ball of radius ``R``.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    R: float
    gamma: float = math.inf
    activation: str = "tanh"
    psi: Activation = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.array(self.a, dtype=float, copy=True)
        b = np.array(self.b, dtype=float, copy=True).reshape(-1)
        c = np.array(self.c, dtype=float, copy=True).reshape(-1)
        if a.ndim != 2:
            raise ValueError(f"a must be an (M, n) array, got shape {a.shape}")
        M = a.shape[0]
        if b.shape != (M,) or c.shape != (M,):
            raise ValueError(f"b and c must have length M={M}, got {b.shape} and {c.shape}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive or inf, got {self.gamma}")
        for arr in (a, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "psi", get_activation(self.activation))

    @property
    def n(self):
        return self.a.shape[1]

    @property
    def M(self):
        return self.a.shape[0]

    @property
    def hard_cutoff(self):
        return math.isinf(self.gamma)

    # -- parameter vector plumbing -------------------------------------

    def flat(self):
        """Parameters packed as ``[a.ravel(), b, c]``."""
        return np.concatenate([self.a.ravel(), self.b, self.c])

    def with_flat(self, theta):
        M, n = self.M, self.n
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (M * n + 2 * M,):
            raise ValueError(f"expected {M * n + 2 * M} parameters, got {theta.shape}")
        return replace(
            self,
            a=theta[: M * n].reshape(M, n),
            b=theta[M * n : M * n + M],
            c=theta[M * n + M :],
        )

    def with_params(self, a=None, b=None, c=None):
        return replace(
            self,
            a=self.a if a is None else a,
            b=self.b if b is None else b,
            c=self.c if c is None else c,
        )

    def zeroed(self):
        """Same shape with every output coefficient set to zero (G = 0)."""
        return self.with_params(c=np.zeros(self.M))


def init_model(n, M, R, gamma=math.inf, activation="tanh", seed=0):
    """Seeded random initialisation.

    a ~ N(0, 1/n) entrywise, b ~ U(-R, R), c ~ N(0, 1/sqrt(M)) (std).
    """
    if n < 1 or M < 1:
        raise ValueError("n and M must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    a = rng.standard_normal((M, n)) / math.sqrt(n)
    b = rng.uniform(-R, R, size=M)
    c = rng.standard_normal(M) / math.sqrt(M)
    return RidgeModel(a, b, c, R=R, gamma=gamma, activation=activation)


def _as_batch(model, x):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != model.n:
        raise ValueError(f"points must have dimension {model.n}, got shape {np.shape(x)}")
    return X, single


def cutoff(model, X):
    """sigma(gamma*(R - |x|)) per row, or the ball indicator when gamma is inf."""
    r = np.linalg.norm(X, axis=1)
    if model.hard_cutoff:
        return (r <= model.R).astype(float)
    return sigmoid(model.gamma * (model.R - r))


def radial_factor(model, X):
    """Row-wise vector -gamma*(1 - sigma) * x/|x|.

    Zero for the hard cutoff and at the origin.
    """
    if model.hard_cutoff:
        return np.zeros_like(X)
    r = np.linalg.norm(X, axis=1)
    s = sigmoid(model.gamma * (model.R - r))
    safe = np.where(r > 0, r, 1.0)
    scale = np.where(r > 0, -model.gamma * (1.0 - s) / safe, 0.0)
    return scale[:, None] * X


def theta(model, X):
    U = X @ model.a.T - model.b
    return model.psi.f(U) @ model.c


def grad_theta(model, X):
    U = X @ model.a.T - model.b
    return (model.psi.d1(U) * model.c) @ model.a


def eval_model(model, x):
    """G(x) = sigma(gamma*(R - |x|)) * sum_i c_i psi(a_i.x - b_i)."""
    X, single = _as_batch(model, x)
    out = cutoff(model, X) * theta(model, X)
    return out[0] if single else out


def effective_gradient(model, x):
    """Gradient of G divided by the cutoff factor.

    This is ``-gamma*(1-sigma)*x/|x| * theta(x) + grad theta(x)``, the field
    that enters the alignment penalty and the moment matrix, where samples
    are drawn from a density proportional to sigma^2. With the hard cutoff it
    is just ``grad theta``.
    """
    X, single = _as_batch(model, x)
    U = X @ model.a.T - model.b
    g = (model.psi.d1(U) * model.c) @ model.a
    if not model.hard_cutoff:
        g = g + radial_factor(model, X) * (model.psi.f(U) @ model.c)[:, None]
    return g[0] if single else g


def grad_x_model(model, x):
    """Exact input gradient of :func:`eval_model`."""
    X, single = _as_batch(model, x)
    g = cutoff(model, X)[:, None] * effective_gradient(model, X)
    return g[0] if single else g


def amplitude_bound(model):
    return float(np.sum(np.abs(model.c)) * model.psi.sup)


# -- text serialisation -------------------------------------------------


def _fmt(v):
    if math.isinf(v):
        return "inf"
    return format(float(v), ".17g")


def dumps_model(model):
    lines = [f"ridgemodel {model.n} {model.M} {_fmt(model.gamma)} {_fmt(model.R)} {model.activation}"]
    for ai, bi, ci in zip(model.a, model.b, model.c):
        lines.append(" ".join(_fmt(v) for v in (*ai, bi, ci)))
    return "\n".join(lines) + "\n"


def loads_model(text):
    rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    head = rows[0]
    if len(head) != 6 or head[0] != "ridgemodel":
        raise ValueError("not a ridgemodel file: bad header")
    n, M = int(head[1]), int(head[2])
    gamma, R, activation = float(head[3]), float(head[4]), head[5]
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, n + 2)
    if body.shape[0] != M:
        raise ValueError(f"header declares M={M} units but file has {body.shape[0]}")
    return RidgeModel(body[:, :n], body[:, n], body[:, n + 1], R=R, gamma=gamma, activation=activation)


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path) as fh:
        return loads_model(fh.read())
