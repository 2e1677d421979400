"""Monte-Carlo objective of one outer step: data fit + lambda * alignment penalty.

The penalty compares the model's gradient field on the cutoff samples with a
frozen *anchor*: the previous model's gradient field right-multiplied by the
previous projector. Anchors are computed once per outer iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import cutoff, effective_gradient, eval_model, radial_factor


def evaluate_target(target, X):
    """Evaluate a black-box target on a batch, row by row if it is not vectorised."""
    X = np.asarray(X, dtype=float)
    try:
        y = np.asarray(target(X), dtype=float)
        if y.shape == (X.shape[0],):
            return y
    except Exception:
        pass
    return np.array([float(target(x)) for x in X])


@dataclass(frozen=True)
class ObjectiveContext:
    target: object
    gauss_batch: object
    cutoff_batch: object
    lam: float
    anchors: np.ndarray
    projector: np.ndarray
    fx: np.ndarray = field(default=None, repr=False)
    # scratch arrays reused across evaluations; a context is not meant to be shared between threads
    _scratch: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def buffer(self, name, shape):
        buf = self._scratch.get(name)
        if buf is None or buf.shape != shape:
            buf = self._scratch[name] = np.empty(shape)
        return buf

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"penalty weight must be >= 0, got {self.lam}")
        anchors = np.asarray(self.anchors, dtype=float)
        if anchors.shape != self.cutoff_batch.points.shape:
            raise ValueError(
                f"anchors have shape {anchors.shape}, expected {self.cutoff_batch.points.shape}"
            )
        object.__setattr__(self, "anchors", anchors)
        if self.fx is None:
            object.__setattr__(self, "fx", evaluate_target(self.target, self.gauss_batch.points))


def make_context(target, gauss_batch, cutoff_batch, lam, prev_model, projector, fx=None):
    """Freeze the anchors of (prev_model, projector) into a context."""
    anchors = penalty_anchor(prev_model, cutoff_batch, projector)
    return ObjectiveContext(target, gauss_batch, cutoff_batch, float(lam), anchors,
                            np.asarray(projector, dtype=float), fx)


def data_fit(model, target, gauss_batch, fx=None):
    """(1/K) sum (f(x_i) - G(x_i))^2."""
    X = gauss_batch.points
    if X.shape[1] != model.n:
        raise ValueError(f"batch dimension {X.shape[1]} does not match model dimension {model.n}")
    if fx is None:
        fx = evaluate_target(target, X)
    r = fx - eval_model(model, X)
    return float(np.mean(r * r))


def penalty_anchor(model, cutoff_batch, projector):
    """Rows g_prev(z_i) @ P for every cutoff sample."""
    P = np.asarray(projector, dtype=float)
    return effective_gradient(model, cutoff_batch.points) @ P


def penalty_term(model, cutoff_batch, anchors):
    """(1/L) sum |g(z_i) - anchor_i|^2."""
    d = effective_gradient(model, cutoff_batch.points) - anchors
    return float(np.mean(np.sum(d * d, axis=1)))


def objective_parts(model, ctx):
    phi1 = data_fit(model, ctx.target, ctx.gauss_batch, ctx.fx)
    phi2 = penalty_term(model, ctx.cutoff_batch, ctx.anchors)
    return phi1, phi2


def objective_total(model, ctx):
    phi1, phi2 = objective_parts(model, ctx)
    return phi1 + ctx.lam * phi2


def model_distance(model1, model2, ctx):
    """Empirical distance delta between two models in the objective's own norm.

    delta^2 = (1/K) sum (G1 - G2)^2 + lam (1/L) sum |g1 - g2|^2 on the context's
    batches, so that |Phi(G1) - Phi(G2)| <= delta (2 sqrt(Phi(G2)) + delta).
    """
    X, Z = ctx.gauss_batch.points, ctx.cutoff_batch.points
    d0 = eval_model(model1, X) - eval_model(model2, X)
    d1 = effective_gradient(model1, Z) - effective_gradient(model2, Z)
    return float(np.sqrt(np.mean(d0 * d0) + ctx.lam * np.mean(np.sum(d1 * d1, axis=1))))


def value_and_grad(model, ctx):
    """Objective value and its gradient in the packed ``model.flat()`` layout.

    Returns ``(total, phi1, phi2, grad)``.
    """
    psi = model.psi
    a, b, c = model.a, model.b, model.c
    lam = ctx.lam
    M = model.M

    # data fit
    X = ctx.gauss_batch.points
    K = X.shape[0]
    U = np.matmul(X, a.T, out=ctx.buffer("U", (K, M)))
    U -= b
    F, D1, _ = psi.all(U, (ctx.buffer("F", (K, M)), ctx.buffer("D1", (K, M)), ctx.buffer("D2", (K, M))))
    s = cutoff(model, X)
    resid = ctx.fx - s * (F @ c)
    phi1 = float(np.mean(resid * resid))
    w = (-2.0 / K) * resid * s
    gc = F.T @ w
    WD = np.multiply(D1, w[:, None], out=U)
    WD *= c
    ga = WD.T @ X
    gb = -WD.sum(axis=0)

    # alignment penalty
    Z = ctx.cutoff_batch.points
    L = Z.shape[0]
    V = np.matmul(Z, a.T, out=ctx.buffer("V", (L, M)))
    V -= b
    Fz, D1z, D2z = psi.all(V, (ctx.buffer("Fz", (L, M)), ctx.buffer("D1z", (L, M)), ctx.buffer("D2z", (L, M))))
    T = np.multiply(D1z, c, out=V)
    g = T @ a
    if not model.hard_cutoff:
        rho = radial_factor(model, Z)
        g += rho * (Fz @ c)[:, None]
    diff = g - ctx.anchors
    phi2 = float(np.mean(np.sum(diff * diff, axis=1)))
    if lam > 0:
        Dv = (2.0 * lam / L) * diff
        S = D1z.T @ Dv  # S[m] = sum_i psi'(v_im) Dv_i
        Q = np.matmul(Dv, a.T, out=ctx.buffer("Q", (L, M)))
        Q *= D2z  # psi''(v_im) (Dv_i . a_m)
        if not model.hard_cutoff:
            q = np.sum(Dv * rho, axis=1)
            Q += np.multiply(D1z, q[:, None], out=V)
            gc = gc + Fz.T @ q
        gc = gc + np.sum(S * a, axis=1)
        gb = gb - c * Q.sum(axis=0)
        ga = ga + c[:, None] * (Q.T @ Z + S)

    grad = np.concatenate([ga.ravel(), gb, gc])
    return phi1 + lam * phi2, phi1, phi2, grad


def grad_params(model, ctx):
    """Analytic gradient of :func:`objective_total` w.r.t. ``model.flat()``."""
    return value_and_grad(model, ctx)[3]


def split_grad(model, grad):
    M, n = model.M, model.n
    return grad[: M * n].reshape(M, n), grad[M * n : M * n + M], grad[M * n + M :]
