"""Variable kernel density estimation.

Sample-point estimators with one inverse bandwidth m_n per data point,
Silverman's rule, and the fixed-point iteration coupling the bandwidths to
the estimated density.  Only scalar bandwidths (times identity in d > 1)
are supported.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .grid import Grid, ScalarField

__all__ = [
    "SampleSet",
    "BandwidthVector",
    "DensityEstimate",
    "VkdeFixedPointReport",
    "gaussian_kernel",
    "silverman_bandwidth",
    "kde_fixed",
    "vkde_sample_point",
    "vkde_fixed_point",
    "calibrate_kappa",
]


@dataclasses.dataclass(frozen=True)
class SampleSet:
    points: np.ndarray  # (N, d)

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        if p.ndim != 2 or p.shape[0] < 2:
            raise ValueError("need at least 2 samples as an (N, d) array")
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite sample coordinates")
        object.__setattr__(self, "points", p)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclasses.dataclass(frozen=True)
class BandwidthVector:
    """Per-sample inverse bandwidths m_n with their clip bounds."""

    m: np.ndarray
    m_min: float
    m_max: float

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if np.any(m <= 0.0) or not np.all(np.isfinite(m)):
            raise ValueError("inverse bandwidths must be positive and finite")
        if np.any(m < self.m_min) or np.any(m > self.m_max):
            raise ValueError("inverse bandwidth outside clip bounds")
        object.__setattr__(self, "m", m)


@dataclasses.dataclass(frozen=True)
class VkdeFixedPointReport:
    iterations: int
    final_residual: float
    converged: bool
    pinned_warning: bool


def gaussian_kernel(u: np.ndarray) -> np.ndarray:
    """Standard Gaussian density on R^d; u has shape (..., d)."""
    u = np.asarray(u, dtype=float)
    d = u.shape[-1]
    return (2.0 * math.pi) ** (-d / 2.0) * np.exp(-0.5 * (u ** 2).sum(axis=-1))


def silverman_bandwidth(d: int, n: int) -> float:
    """h_opt = (4 / ((2d+1) N))^{1/(d+4)}."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and N >= 1")
    return (4.0 / ((2.0 * d + 1.0) * n)) ** (1.0 / (d + 4.0))


@dataclasses.dataclass(frozen=True)
class DensityEstimate:
    """Sample-point estimator rho_m(x) = (1/N) sum_n m_n^d K(m_n (x - y_n))."""

    samples: SampleSet
    m: np.ndarray
    kernel: object = gaussian_kernel

    def at(self, pts: np.ndarray, chunk: int = 2048) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        d = self.samples.dim
        flat = np.atleast_2d(pts.reshape(-1, d))
        y = self.samples.points
        md = self.m ** d
        out = np.empty(flat.shape[0])
        for s in range(0, flat.shape[0], chunk):
            block = flat[s : s + chunk]
            u = self.m[None, :, None] * (block[:, None, :] - y[None, :, :])
            out[s : s + chunk] = (md[None, :] * self.kernel(u)).mean(axis=1)
        return out.reshape(pts.shape[:-1])

    def field(self, grid: Grid) -> ScalarField:
        return ScalarField(grid, self.at(grid.points()))


def vkde_sample_point(samples: SampleSet, m, kernel=gaussian_kernel) -> DensityEstimate:
    if isinstance(m, BandwidthVector):
        m = m.m
    m = np.asarray(m, dtype=float)
    if m.shape != (samples.n,):
        raise ValueError("size-mismatch: need one bandwidth per sample")
    return DensityEstimate(samples, m, kernel)


def kde_fixed(samples: SampleSet, kernel=gaussian_kernel, h: float = 1.0) -> DensityEstimate:
    """Fixed-bandwidth estimator; the constant-bandwidth special case of the
    sample-point estimator, so the reduction is bit-for-bit."""
    if h <= 0.0:
        raise ValueError("nonpositive-bandwidth")
    return vkde_sample_point(samples, np.full(samples.n, 1.0 / h), kernel)


def default_clip(d: int, n: int) -> tuple:
    m0 = 1.0 / silverman_bandwidth(d, n)
    return (1e-3 * m0, 1e3 * m0)


def calibrate_kappa(samples: SampleSet, beta: float, kernel=gaussian_kernel) -> float:
    """Choose kappa so that a constant Silverman pilot maps to itself at the
    median: kappa = m0 / median_n rho_{m0}(y_n)^beta."""
    m0 = 1.0 / silverman_bandwidth(samples.dim, samples.n)
    pilot = vkde_sample_point(samples, np.full(samples.n, m0), kernel)
    dens = pilot.at(samples.points)
    return float(m0 / np.median(dens ** beta))


def vkde_fixed_point(
    samples: SampleSet,
    kappa: float,
    beta: float,
    kernel=gaussian_kernel,
    tol: float = 1e-6,
    max_iter: int = 100,
    clip: tuple | None = None,
    on_iterate=None,
):
    """Iterate m_n <- clip(kappa * rho_m(y_n)^beta) from the Silverman pilot.

    Convergence of this iteration is an open question; the report carries the
    outcome instead of asserting it.  A bandwidth pinned at a clip bound for
    5 consecutive iterations sets the pinned_warning flag.  on_iterate, when
    given, is called with (iteration, m) after every update.
    """
    if kappa <= 0.0:
        raise ValueError("nonpositive-kappa")
    if beta <= 0.0:
        raise ValueError("nonpositive-beta")
    d, n = samples.dim, samples.n
    if clip is None:
        clip = default_clip(d, n)
    m_min, m_max = clip
    m = np.full(n, 1.0 / silverman_bandwidth(d, n))
    m = np.clip(m, m_min, m_max)
    pinned_count = np.zeros(n, dtype=int)
    pinned_warning = False
    residual = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dens = vkde_sample_point(samples, m, kernel).at(samples.points)
        nxt = np.clip(kappa * dens ** beta, m_min, m_max)
        pinned = (nxt == m_min) | (nxt == m_max)
        pinned_count = np.where(pinned, pinned_count + 1, 0)
        if np.any(pinned_count >= 5):
            pinned_warning = True
        residual = float(np.abs(nxt / m - 1.0).max())
        m = nxt
        if on_iterate is not None:
            on_iterate(iterations, m.copy())
        if residual <= tol:
            break
    report = VkdeFixedPointReport(iterations, residual, residual <= tol, pinned_warning)
    return BandwidthVector(m, m_min, m_max), report
