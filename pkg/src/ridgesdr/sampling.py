"""Seeded Monte-Carlo point sets.

Every sampler builds its own ``numpy.random.Generator`` on the Philox
counter-based bit generator keyed by the given seed, so a batch is a pure
function of ``(seed, parameters)`` and reproducible across platforms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .model import sigmoid

GAUSSIAN = "gaussian"
CUTOFF = "cutoff"


@dataclass(frozen=True)
class SampleBatch:
    points: np.ndarray
    density_tag: str
    seed: int

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def n(self):
        return self.points.shape[1]

    def transformed(self, Q):
        """Batch with every point mapped by the matrix ``Q`` (x -> Qx)."""
        return SampleBatch(self.points @ np.asarray(Q).T, self.density_tag, self.seed)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j + 1}" for j in range(self.n)])
            for p in self.points:
                w.writerow([format(v, ".17g") for v in p])


def _rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


def _check_counts(n, count):
    if n < 1 or count < 1:
        raise ValueError(f"dimension and sample count must be >= 1, got n={n}, count={count}")


def sample_gaussian(n, K, seed):
    """K draws from pi^(-n/2) exp(-|x|^2): iid coordinates N(0, 1/2)."""
    _check_counts(n, K)
    pts = _rng(seed).normal(0.0, math.sqrt(0.5), size=(K, n))
    return SampleBatch(pts, GAUSSIAN, seed)


def _uniform_ball(rng, count, n, radius):
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / n)
    return d * r[:, None]


def sample_cutoff(n, L, gamma, R, seed):
    """L draws from the density proportional to sigma(gamma*(R - |x|))^2.

    gamma = inf gives the uniform distribution on the ball of radius R.
    Finite gamma uses rejection against the uniform ball of radius
    R + 20/gamma, accepting with probability sigma^2.
    """
    _check_counts(n, L)
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    rng = _rng(seed)
    if math.isinf(gamma):
        return SampleBatch(_uniform_ball(rng, L, n, R), CUTOFF, seed)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    outer = R + 20.0 / gamma
    chunks, have = [], 0
    while have < L:
        m = max(2 * (L - have), 64)
        cand = _uniform_ball(rng, m, n, outer)
        s = sigmoid(gamma * (R - np.linalg.norm(cand, axis=1)))
        keep = cand[rng.random(m) < s * s]
        chunks.append(keep)
        have += keep.shape[0]
    return SampleBatch(np.concatenate(chunks)[:L], CUTOFF, seed)


def chi_radius_cdf(r, n):
    """P[|x| <= r] for x ~ pi^(-n/2) exp(-|x|^2); |x|^2 is Gamma(n/2, 1)."""
    return float(gammainc(0.5 * n, r * r))


def quantile_radius(p, n, tol=1e-8):
    """Radius R with P[|x| > R] = p under the Gaussian sampling density."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"tail probability must lie in (0, 1), got {p}")
    target = 1.0 - p
    lo, hi = 0.0, 1.0
    while chi_radius_cdf(hi, n) < target:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if chi_radius_cdf(mid, n) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def spawn_seeds(seed, count):
    """Independent 63-bit child seeds derived from one run seed."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(ch.generate_state(1, np.uint64)[0] >> np.uint64(1)) for ch in children]
