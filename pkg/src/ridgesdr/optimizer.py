"""Inner minimisation of one outer step's objective with Adam."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objective import value_and_grad


class NonFiniteError(FloatingPointError):
    """Raised when the objective or its gradient stops being finite."""

    def __init__(self, message, block=None, step=None):
        super().__init__(message)
        self.block = block
        self.step = step


@dataclass(frozen=True)
class OptimizerConfig:
    step_count: int = 200
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    warm_start: bool = True

    def __post_init__(self):
        if self.step_count < 1:
            raise ValueError("step_count must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")


def _nonfinite_block(model, grad):
    M, n = model.M, model.n
    blocks = (("a", slice(0, M * n)), ("b", slice(M * n, M * n + M)), ("c", slice(M * n + M, None)))
    for name, sl in blocks:
        if not np.all(np.isfinite(grad[sl])):
            return name
    return "objective"


@dataclass
class MinimizeResult:
    model: object
    value: float
    phi1: float
    phi2: float
    trace: list  # best-so-far objective after each step


def run_adam(model0, ctx, cfg=OptimizerConfig()):
    """Adam on the packed parameters, keeping the best iterate seen.

    The best objective never exceeds the starting objective. If the gradient
    vanishes exactly the starting model is kept unchanged.
    """
    # overflow is detected and reported explicitly below
    with np.errstate(over="ignore", invalid="ignore"):
        return _adam(model0, ctx, cfg)


def _adam(model0, ctx, cfg):
    theta = model0.flat()
    best_val, p1, p2, grad = value_and_grad(model0, ctx)
    if not (np.isfinite(best_val) and np.all(np.isfinite(grad))):
        raise NonFiniteError(
            f"non-finite objective/gradient at start (block {_nonfinite_block(model0, grad)})",
            block=_nonfinite_block(model0, grad), step=0,
        )
    best = (model0, best_val, p1, p2)
    trace = []
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2 = cfg.beta1, cfg.beta2
    for step in range(1, cfg.step_count + 1):
        if not np.any(grad):
            trace.extend([best[1]] * (cfg.step_count - step + 1))
            break
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * (grad * grad)
        mhat = m / (1.0 - b1**step)
        vhat = v / (1.0 - b2**step)
        theta = theta - cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.eps)
        model = model0.with_flat(theta)
        val, p1, p2, grad = value_and_grad(model, ctx)
        if not (np.isfinite(val) and np.all(np.isfinite(grad))):
            block = _nonfinite_block(model, grad)
            raise NonFiniteError(f"non-finite objective/gradient at inner step {step} (block {block})",
                                 block=block, step=step)
        if val < best[1]:
            best = (model, val, p1, p2)
        trace.append(best[1])
    return MinimizeResult(best[0], best[1], best[2], best[3], trace)


def minimize(model0, ctx, cfg=OptimizerConfig()):
    """Best model found by :func:`run_adam`."""
    return run_adam(model0, ctx, cfg).model
