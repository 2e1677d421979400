import math

import numpy as np
import pytest

from ridgesdr.model import RidgeModel, eval_model, init_model
from ridgesdr.objective import make_context, objective_total
from ridgesdr.optimizer import NonFiniteError, OptimizerConfig, minimize, run_adam
from ridgesdr.sampling import sample_cutoff, sample_gaussian

from conftest import random_context


def test_recovers_identifiable_single_unit():
    R = 2.0
    truth = RidgeModel(np.array([[1.0, 0.0, 0.0]]), [0.0], [1.0], R=R)
    gb, cb = sample_gaussian(3, 400, 1), sample_cutoff(3, 50, math.inf, R, 2)
    ctx = make_context(lambda X: eval_model(truth, X), gb, cb, 0.0, truth.zeroed(), np.zeros((3, 3)))
    start = RidgeModel(np.array([[0.9, 0.1, -0.05]]), [0.1], [0.8], R=R)
    res = run_adam(start, ctx, OptimizerConfig(step_count=3000))
    assert res.phi1 < 1e-4


def test_zero_gradient_returns_start_unchanged():
    m = init_model(3, 4, 1.0, seed=0).zeroed()
    gb, cb = sample_gaussian(3, 20, 1), sample_cutoff(3, 20, math.inf, 1.0, 2)
    ctx = make_context(lambda X: np.zeros(len(X)), gb, cb, 0.0, m, np.zeros((3, 3)))
    assert minimize(m, ctx) is m


@pytest.mark.parametrize("gamma", [math.inf, 2.0])
def test_monotone_acceptance(gamma):
    for seed in range(5):
        m, ctx = random_context(seed, gamma=gamma)
        res = run_adam(m, ctx, OptimizerConfig(step_count=30, learning_rate=0.3))
        assert objective_total(res.model, ctx) <= objective_total(m, ctx) + 1e-12
        assert all(b <= a for a, b in zip(res.trace, res.trace[1:]))
        assert res.value == pytest.approx(objective_total(res.model, ctx), rel=1e-10)


def test_deterministic():
    m, ctx = random_context(5)
    r1 = run_adam(m, ctx, OptimizerConfig(step_count=40))
    r2 = run_adam(m, ctx, OptimizerConfig(step_count=40))
    assert np.array_equal(r1.model.flat(), r2.model.flat()) and r1.value == r2.value


def test_nonfinite_target_aborts():
    m, ctx = random_context(1)
    bad = make_context(lambda X: np.full(len(X), np.nan), ctx.gauss_batch, ctx.cutoff_batch, 1.0,
                       m, np.eye(4))
    with pytest.raises(NonFiniteError) as err:
        run_adam(m, bad, OptimizerConfig(step_count=5))
    assert err.value.block in {"a", "b", "c", "objective"} and err.value.step == 0


def test_overflowing_learning_rate_names_block():
    m, ctx = random_context(2)
    with pytest.raises(NonFiniteError) as err:
        run_adam(m, ctx, OptimizerConfig(step_count=5, learning_rate=1e308))
    assert err.value.block in {"a", "b", "c", "objective"}


@pytest.mark.parametrize("kwargs", [dict(step_count=0), dict(learning_rate=0.0), dict(beta1=1.0),
                                    dict(beta2=0.0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        OptimizerConfig(**kwargs)
