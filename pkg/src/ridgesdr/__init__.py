"""Subspace recovery with cutoff ridge networks and a gradient-alignment penalty."""

from .driver import RunConfig, RunResult, preset_config, run_alternating
from .model import RidgeModel, eval_model, grad_x_model, init_model
from .optimizer import OptimizerConfig
from .sampling import quantile_radius, sample_cutoff, sample_gaussian
from .spectral import rank_penalty, subspace_accuracy, sym_eigen, top_k_projector

__all__ = [
    "OptimizerConfig",
    "RidgeModel",
    "RunConfig",
    "RunResult",
    "eval_model",
    "grad_x_model",
    "init_model",
    "preset_config",
    "quantile_radius",
    "rank_penalty",
    "run_alternating",
    "sample_cutoff",
    "sample_gaussian",
    "subspace_accuracy",
    "sym_eigen",
    "top_k_projector",
]

__version__ = "0.1.0"
