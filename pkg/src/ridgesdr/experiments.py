"""Synthetic recovery study on an Ackley target with a ball-indicator bump."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .driver import RunAborted, preset_config, run_alternating
from .spectral import coordinate_projector, subspace_accuracy

DEFAULT_LAMBDAS = (1e-3, 1e-2, 1e-1, 1.0, 10.0)
DEFAULT_CS = (0.0, 1.0, 5.0)
CSV_FIELDS = ["n", "C", "lambda", "seed", "acc", "phi1", "phi2", "total", "gap", "runtime_s"]


def ackley(x, y):
    return (-20.0 * np.exp(-0.2 * np.sqrt(0.5 * (x * x + y * y)))
            - np.exp(0.5 * (np.cos(2 * np.pi * x) + np.cos(2 * np.pi * y)))
            + np.e + 20.0)


def ackley_indicator_target(n, C):
    """f(x) = A(x1, x2) + C * [|x| <= 1], vectorised over rows."""
    if n < 2:
        raise ValueError(f"the target needs n >= 2, got {n}")

    def f(X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != n:
            raise ValueError(f"expected points of dimension {n}, got {X.shape[1]}")
        inside = (np.linalg.norm(X, axis=1) <= 1.0).astype(float)
        out = ackley(X[:, 0], X[:, 1]) + C * inside
        return out[0] if single else out

    f.n, f.C = n, C
    return f


@dataclass(frozen=True)
class SweepSpec:
    dims: tuple = (4,)
    Cs: tuple = DEFAULT_CS
    lambdas: tuple = DEFAULT_LAMBDAS
    seeds: tuple = (0, 1, 2)
    k: int = 2
    preset: str = "desk"
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.dims and self.Cs and self.lambdas and self.seeds):
            raise ValueError("sweep grids must be non-empty")

    def config(self, n, lam, seed):
        return preset_config(self.preset, n, self.k, lam=lam, seed=seed, **self.overrides)


def run_cell(cfg, C):
    target = ackley_indicator_target(cfg.n, C)
    P_true = coordinate_projector(cfg.n, range(cfg.k))
    t0 = time.perf_counter()
    res = run_alternating(cfg, target, P_true)
    runtime = time.perf_counter() - t0
    last = res.trace[-1] if res.trace else None
    return {
        "n": cfg.n, "C": C, "lambda": cfg.lam, "seed": cfg.seed,
        "acc": subspace_accuracy(res.projector, P_true),
        "phi1": last.phi1 if last else math.nan,
        "phi2": last.phi2 if last else math.nan,
        "total": last.total if last else math.nan,
        "gap": last.gap if last else math.nan,
        "runtime_s": runtime,
        "failed": False,
    }


def run_sweep(spec, out_csv=None, progress=None):
    """Run every (n, C, lambda, seed) cell; failed cells are flagged, not fatal."""
    rows = []
    writer = None
    fh = None
    if out_csv is not None:
        fh = open(out_csv, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
    try:
        for n, C, lam, seed in product(spec.dims, spec.Cs, spec.lambdas, spec.seeds):
            cfg = spec.config(n, lam, seed)
            try:
                row = run_cell(cfg, C)
            except (RunAborted, FloatingPointError, np.linalg.LinAlgError) as exc:
                row = {"n": n, "C": C, "lambda": lam, "seed": seed, "acc": math.nan, "phi1": math.nan,
                       "phi2": math.nan, "total": math.nan, "gap": math.nan, "runtime_s": math.nan,
                       "failed": True, "error": str(exc)}
            rows.append(row)
            if writer is not None:
                writer.writerow([_cell(row[k]) for k in CSV_FIELDS])
                fh.flush()
            if progress is not None:
                progress(row)
    finally:
        if fh is not None:
            fh.close()
    return rows


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_sweep_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {k: float(rec[k]) for k in CSV_FIELDS}
            row["n"], row["seed"] = int(row["n"]), int(row["seed"])
            rows.append(row)
    return rows


def mean_curves(rows):
    """{(n, C): [(lambda, mean acc over seeds), ...]} sorted by lambda; NaN cells skipped."""
    acc = {}
    for r in rows:
        if math.isnan(r["acc"]):
            continue
        acc.setdefault((r["n"], r["C"]), {}).setdefault(r["lambda"], []).append(r["acc"])
    return {key: sorted((lam, float(np.mean(v))) for lam, v in by_lam.items())
            for key, by_lam in sorted(acc.items())}


def has_interior_minimum(curve):
    """True if the argmin of a (lambda, acc) curve is neither endpoint."""
    vals = [a for _, a in curve]
    if len(vals) < 3:
        return False
    i = int(np.argmin(vals))
    return 0 < i < len(vals) - 1


# -- SVG chart ---------------------------------------------------------------

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def _num(v):
    return f"{v:.2f}"


def render_svg(rows, width=640, height=420):
    """acc versus log10(lambda), one polyline per (n, C) group."""
    curves = mean_curves(rows)
    if not curves:
        raise ValueError("cannot chart an empty table")
    left, right, top, bottom = 70, 150, 30, 50
    pw, ph = width - left - right, height - top - bottom
    lams = [lam for c in curves.values() for lam, _ in c]
    accs = [a for c in curves.values() for _, a in c]
    lx = [math.log10(v) for v in lams]
    x0, x1 = min(lx), max(lx)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    y0, y1 = 0.0, max(accs) * 1.1 if max(accs) > 0 else 1.0

    def sx(lam):
        return left + (math.log10(lam) - x0) / (x1 - x0) * pw

    def sy(a):
        return top + ph - (a - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for e in range(math.ceil(x0), math.floor(x1) + 1):
        x = sx(10.0**e)
        out.append(f'<line x1="{_num(x)}" y1="{top + ph}" x2="{_num(x)}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(x)}" y="{top + ph + 20}" font-size="12" text-anchor="middle">1e{e}</text>')
    for i in range(5):
        a = y0 + (y1 - y0) * i / 4
        y = sy(a)
        out.append(f'<line x1="{left - 5}" y1="{_num(y)}" x2="{left}" y2="{_num(y)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_num(y + 4)}" font-size="12" text-anchor="end">{a:.2f}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" font-size="13" text-anchor="middle">lambda</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.2f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.2f})">acc</text>')
    for i, ((n, C), curve) in enumerate(curves.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{_num(sx(lam))},{_num(sy(a))}" for lam, a in curve)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        for lam, a in curve:
            out.append(f'<circle cx="{_num(sx(lam))}" cy="{_num(sy(a))}" r="3" fill="{color}"/>')
        ly = top + 15 + 20 * i
        out.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 40}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 45}" y="{ly + 4}" font-size="12">n={n}, C={C:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_chart(rows, path):
    svg = render_svg(rows)
    with open(path, "w") as fh:
        fh.write(svg)
    return svg
