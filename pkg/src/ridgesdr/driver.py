"""Outer alternating loop: fit with the alignment penalty, then re-estimate the subspace."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .model import dumps_model, init_model
from .objective import evaluate_target, make_context, value_and_grad
from .optimizer import NonFiniteError, OptimizerConfig, run_adam
from .sampling import quantile_radius, sample_cutoff, sample_gaussian, spawn_seeds
from .spectral import estimate_moment, subspace_accuracy, top_k_projector


class RunAborted(NonFiniteError):
    def __init__(self, message, iteration, block=None):
        super().__init__(message, block=block)
        self.iteration = iteration


@dataclass(frozen=True)
class RunConfig:
    n: int
    k: int
    lam: float = 0.1
    gamma: float = math.inf
    radius: float | None = None
    quantile_p: float = 0.01
    N: int = 50
    M: int = 64
    K: int = 500
    L: int = 2000
    seed: int = 0
    activation: str = "tanh"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if not 1 <= self.k < self.n:
            raise ValueError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.N < 0:
            raise ValueError("N must be >= 0")
        if min(self.M, self.K, self.L) < 1:
            raise ValueError("M, K and L must be >= 1")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def R(self):
        if self.radius is not None:
            return float(self.radius)
        return quantile_radius(self.quantile_p, self.n)

    def resolved(self):
        """Plain-dict view with the radius filled in."""
        d = asdict(self)
        d["radius"] = self.R
        d["gamma"] = "inf" if math.isinf(self.gamma) else self.gamma
        return d


PRESETS = {
    "paper": dict(N=200, K=1000, L=10000, M=200, gamma=math.inf, radius=None, quantile_p=0.01),
    "desk": dict(N=50, K=500, L=2000, M=64, gamma=math.inf, radius=None, quantile_p=0.01),
}


def preset_config(name, n, k, **overrides):
    params = dict(PRESETS[name])
    params.update(overrides)
    return RunConfig(n=n, k=k, **params)


@dataclass
class IterationRecord:
    t: int
    phi1: float
    phi2: float
    total: float
    start_total: float
    eigenvalues: list
    gap: float
    acc: float | None
    degenerate: bool


@dataclass
class RunResult:
    config: RunConfig
    projector: np.ndarray
    model: object
    trace: list
    timings: dict = field(default_factory=dict)  # wall-clock seconds per phase; not serialised

    def to_dict(self):
        return {
            "config": self.config.resolved(),
            "projector": self.projector.tolist(),
            "model": dumps_model(self.model),
            "trace": [asdict(r) for r in self.trace],
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def write_trace_csv(self, path):
        n = self.config.n
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(self.config.resolved(), sort_keys=True) + "\n")
            w = csv.writer(fh)
            w.writerow(["t", "phi1", "phi2", "total"] + [f"eig{i + 1}" for i in range(n)] + ["gap", "acc"])
            for r in self.trace:
                acc = "" if r.acc is None else repr(r.acc)
                w.writerow([r.t, repr(r.phi1), repr(r.phi2), repr(r.total)]
                           + [repr(e) for e in r.eigenvalues] + [repr(r.gap), acc])


def make_batches(cfg):
    s_gauss, s_cut, _ = spawn_seeds(cfg.seed, 3)
    return (sample_gaussian(cfg.n, cfg.K, s_gauss),
            sample_cutoff(cfg.n, cfg.L, cfg.gamma, cfg.R, s_cut))


def initial_model(cfg):
    return init_model(cfg.n, cfg.M, cfg.R, cfg.gamma, cfg.activation, seed=spawn_seeds(cfg.seed, 3)[2])


def run_alternating(cfg, target, P_true=None, *, gauss_batch=None, cutoff_batch=None, init=None,
                    callback=None):
    """Run N outer iterations and return the final projector, model and trace.

    Batches and the random initial model are derived from ``cfg.seed`` unless
    given explicitly. ``callback(record)`` is invoked after every iteration.
    """
    timings = {"sampling": 0.0, "optimize": 0.0, "moment": 0.0, "eigen": 0.0}
    t0 = time.perf_counter()
    if gauss_batch is None or cutoff_batch is None:
        gb, cb = make_batches(cfg)
        gauss_batch = gb if gauss_batch is None else gauss_batch
        cutoff_batch = cb if cutoff_batch is None else cutoff_batch
    fx = evaluate_target(target, gauss_batch.points)
    timings["sampling"] += time.perf_counter() - t0
    if init is None:
        init = initial_model(cfg)

    G = init.zeroed()
    P = np.zeros((cfg.n, cfg.n))
    trace = []
    for t in range(1, cfg.N + 1):
        ctx = make_context(target, gauss_batch, cutoff_batch, cfg.lam, G, P, fx)
        start = G if (cfg.optimizer.warm_start and t > 1) else init
        t0 = time.perf_counter()
        try:
            start_total = value_and_grad(start, ctx)[0]
            res = run_adam(start, ctx, cfg.optimizer)
        except NonFiniteError as exc:
            raise RunAborted(f"outer iteration {t}: {exc}", iteration=t, block=exc.block) from exc
        timings["optimize"] += time.perf_counter() - t0
        G = res.model

        t0 = time.perf_counter()
        Mhat = estimate_moment(G, cutoff_batch)
        timings["moment"] += time.perf_counter() - t0
        t0 = time.perf_counter()
        proj = top_k_projector(Mhat, cfg.k)
        timings["eigen"] += time.perf_counter() - t0
        P = proj.matrix

        acc = None if P_true is None else subspace_accuracy(P, P_true)
        rec = IterationRecord(t, res.phi1, res.phi2, res.value, float(start_total),
                              [float(e) for e in proj.eigenvalues], proj.gap, acc, proj.degenerate)
        trace.append(rec)
        if callback is not None:
            callback(rec)
    return RunResult(cfg, P, G, trace, timings)


def with_seed(cfg, seed):
    return replace(cfg, seed=seed)
