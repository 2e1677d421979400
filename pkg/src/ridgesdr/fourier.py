"""Grid checks of the dual-space identities in one and two dimensions.

Transforms use the unitary convention

    F[f](xi) = (2*pi)^(-n/2) * integral f(x) exp(-i xi.x) dx,

discretised on centred grids: node j sits at (j - N/2) * step for
j = 0..N-1 along every axis. A spatial grid with step h maps to a frequency
grid with step 2*pi/(N*h), so the same representation serves both domains.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np

DEFAULT_POINTS = 512
DEFAULT_EXTENT = 12.0
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class GridFunction:
    values: np.ndarray
    step: float

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, copy=True)
        if v.ndim not in (1, 2):
            raise ValueError("only 1-D and 2-D grids are supported")
        if len(set(v.shape)) != 1:
            raise ValueError("grids must have the same number of points on every axis")
        N = v.shape[0]
        if N < 2 or N & (N - 1):
            raise ValueError(f"points per axis must be a power of two, got {N}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "step", float(self.step))

    @property
    def n(self):
        return self.values.ndim

    @property
    def points(self):
        return self.values.shape[0]

    def axis(self):
        N = self.points
        return (np.arange(N) - N // 2) * self.step

    def mesh(self):
        ax = self.axis()
        return np.meshgrid(*([ax] * self.n), indexing="ij")

    def dual_step(self):
        return 2.0 * math.pi / (self.points * self.step)

    def norm(self):
        """Discrete L2 norm with cell-volume weights."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.step**self.n))

    def boundary_ratio(self):
        """Largest boundary magnitude relative to the peak magnitude."""
        a = np.abs(self.values)
        peak = a.max()
        if peak == 0:
            return 0.0
        edge = 0.0
        for ax in range(self.n):
            edge = max(edge, np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
        return float(edge / peak)

    def resolved(self, tol=BOUNDARY_TOL):
        return self.boundary_ratio() < tol

    def to_csv(self, path):
        ax = self.axis()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(self.n)] + ["re", "im"])
            for idx in product(range(self.points), repeat=self.n):
                v = self.values[idx]
                w.writerow([format(ax[i], ".17g") for i in idx] + [format(v.real, ".17g"), format(v.imag, ".17g")])


def sample_grid(func, n=1, points=DEFAULT_POINTS, extent=DEFAULT_EXTENT):
    """Evaluate ``func`` on a centred grid over [-extent, extent)^n.

    ``func`` receives one coordinate array per axis.
    """
    step = 2.0 * extent / points
    ax = (np.arange(points) - points // 2) * step
    mesh = np.meshgrid(*([ax] * n), indexing="ij")
    return GridFunction(func(*mesh), step)


def _alternating(N):
    return np.where(np.arange(N) % 2 == 0, 1.0, -1.0)


def _fft_axis(v, axis, h, inverse):
    # Centred grids make every phase factor a sign: (-1)^j before and (-1)^k after the FFT.
    N = v.shape[axis]
    shape = [1] * v.ndim
    shape[axis] = N
    sign = _alternating(N).reshape(shape)
    glob = np.exp((1j if inverse else -1j) * math.pi * N / 2)
    if inverse:
        out = np.fft.ifft(v * sign, axis=axis) * N
    else:
        out = np.fft.fft(v * sign, axis=axis)
    return out * sign * (glob * h / math.sqrt(2.0 * math.pi))


def grid_fourier(g, check=True):
    """Unitary continuous Fourier transform approximated on the grid."""
    if check and not g.resolved():
        warnings.warn(f"grid function does not decay at the boundary (ratio {g.boundary_ratio():.2e})",
                      RuntimeWarning)
    v = g.values
    for ax in range(g.n):
        v = _fft_axis(v, ax, g.step, inverse=False)
    return GridFunction(v, g.dual_step())


def grid_inverse_fourier(G):
    v = G.values
    for ax in range(G.n):
        v = _fft_axis(v, ax, G.step, inverse=True)
    return GridFunction(v, G.dual_step())


def _trapezoid_weights(N, h):
    w = np.full(N, h)
    w[0] = w[-1] = 0.5 * h
    return w


def weierstrass_transform(g):
    """Direct trapezoid quadrature of integral exp(-|x-y|^2/2) g(y) dy on the grid."""
    ax = g.axis()
    K = np.exp(-0.5 * (ax[:, None] - ax[None, :]) ** 2) * _trapezoid_weights(g.points, g.step)[None, :]
    v = g.values
    for axis in range(g.n):
        v = np.moveaxis(np.tensordot(K, v, axes=([1], [axis])), 0, axis)
    return GridFunction(v, g.step)


@dataclass(frozen=True)
class IdentityCheck:
    residual: float
    scale: complex  # least-squares factor mapping the right side onto the left
    resolved: bool


def convolution_identity_check(l):
    """Relative residual of F[sqrt(p) l] = (2 pi)^(-n/2) * (kernel conv F[l]).

    Here p(x) = exp(-|x|^2) and the kernel is exp(-|xi|^2/2), i.e. F[sqrt(p)].
    Convolution on the frequency side is done by direct quadrature, not FFT.
    """
    mesh = l.mesh()
    r2 = sum(m * m for m in mesh)
    sqrt_p = np.exp(-0.5 * r2)
    lhs = grid_fourier(GridFunction(sqrt_p * l.values, l.step), check=False)
    rhs = weierstrass_transform(grid_fourier(l, check=False))
    rhs_v = rhs.values / (2.0 * math.pi) ** (l.n / 2)
    lhs_v = lhs.values
    denom = np.linalg.norm(lhs_v)
    diff = np.linalg.norm(lhs_v - rhs_v)
    if denom == 0.0:
        residual = 0.0 if diff == 0.0 else math.inf
    else:
        residual = float(diff / denom)
    rr = np.vdot(rhs_v, rhs_v)
    scale = complex(np.vdot(rhs_v, lhs_v) / rr) if rr != 0 else complex(1.0)
    return IdentityCheck(residual, scale, l.resolved())


def support_fraction(G, w, eps):
    """Share of sum |G|^2 on 2-D frequency nodes within ``eps`` of span(w)."""
    if G.n != 2:
        raise ValueError("support fraction is defined for 2-D grids")
    w = np.asarray(w, dtype=float)
    w = w / np.linalg.norm(w)
    x1, x2 = G.mesh()
    dist = np.abs(-w[1] * x1 + w[0] * x2)
    energy = np.abs(G.values) ** 2
    total = energy.sum()
    if total == 0:
        return 0.0
    return float(energy[dist <= eps].sum() / total)


def windowed_ridge(g1d, w, window=1.6, points=DEFAULT_POINTS, extent=DEFAULT_EXTENT):
    """Grid samples of g1d(w.x) * exp(-|x|^2 / (2 window^2))."""
    w = np.asarray(w, dtype=float)
    w = w / np.linalg.norm(w)
    return sample_grid(lambda x1, x2: g1d(w[0] * x1 + w[1] * x2) * np.exp(-(x1**2 + x2**2) / (2 * window**2)),
                       n=2, points=points, extent=extent)


def spectral_support_fraction(g1d, w, eps=None, window=1.6, points=DEFAULT_POINTS, extent=DEFAULT_EXTENT):
    """Energy fraction of a windowed ridge function near the ridge direction.

    ``eps`` defaults to four frequency steps.
    """
    l = windowed_ridge(g1d, w, window, points, extent)
    G = grid_fourier(l)
    if eps is None:
        eps = 4.0 * G.step
    return support_fraction(G, w, eps)


# Built-in test functions for the identity check.
def gaussian(x):
    return np.exp(-0.5 * x * x)


def modulated_gaussian(x):
    return np.exp(-0.5 * x * x) * np.cos(3.0 * x)


def zero(x):
    return np.zeros_like(x)


IDENTITY_CASES = {"gaussian": gaussian, "zero": zero, "gaussian_cos3": modulated_gaussian}


def verify_suite(points=DEFAULT_POINTS, extent=DEFAULT_EXTENT):
    """Residuals of the three 1-D identity cases plus the Weierstrass golden case."""
    out = {}
    for name, fn in IDENTITY_CASES.items():
        out[f"identity[{name}]"] = convolution_identity_check(sample_grid(fn, 1, points, extent)).residual
    g = sample_grid(gaussian, 1, points, extent)
    x = g.axis()
    W = weierstrass_transform(g).values
    out["weierstrass[gaussian]"] = float(np.max(np.abs(W - math.sqrt(math.pi) * np.exp(-x * x / 4))))
    return out
