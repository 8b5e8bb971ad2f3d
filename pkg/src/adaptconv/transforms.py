"""Phase-space transforms of sampled signals.

Fourier transform with the unitary (2pi)^{-d/2} convention, windowed and
adaptive-window Fourier transforms, and the Wigner transform.  All transforms
are quadrature approximations of the continuum integrals, evaluated with
exact complex exponentials on conjugate frequency grids so that inversion
and the Wigner marginal identities hold to roundoff on the grid.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.signal import fftconvolve

from .grid import Grid, MatrixField, ScalarField, SpdMatrix, make_grid

__all__ = [
    "Spectrum",
    "PhaseSpaceField",
    "conjugate_grid",
    "fourier",
    "inverse_fourier",
    "windowed_fourier",
    "adaptive_windowed_fourier",
    "wigner",
    "husimi_check",
]


@dataclasses.dataclass(frozen=True)
class Spectrum:
    freq_grid: Grid
    values: np.ndarray  # complex, shape freq_grid.shape

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.freq_grid.shape:
            raise ValueError("grid-mismatch: spectrum shape != freq grid shape")
        object.__setattr__(self, "values", v)


@dataclasses.dataclass(frozen=True)
class PhaseSpaceField:
    x_grid: Grid
    xi_grid: Grid
    values: np.ndarray  # shape x_grid.shape + xi_grid.shape


def conjugate_grid(grid: Grid) -> Grid:
    """DFT frequency grid: xi_j = 2 pi j/(n dx), j = -n/2 .. n/2 - 1, per axis."""
    lo, hi, n = [], [], []
    for k in range(grid.dim):
        nk = grid.n[k]
        dxi = 2.0 * math.pi / (nk * grid.spacing[k])
        j0 = -(nk // 2)
        lo.append(j0 * dxi)
        hi.append((j0 + nk - 1) * dxi)
        n.append(nk)
    return make_grid(grid.dim, lo, hi, n)


def _grids_close(a: Grid, b: Grid) -> bool:
    return (
        a.n == b.n
        and np.allclose(a.lo, b.lo, rtol=1e-12, atol=1e-12)
        and np.allclose(a.hi, b.hi, rtol=1e-12, atol=1e-12)
    )


def _apply_axis_matrices(vals: np.ndarray, mats: list) -> np.ndarray:
    for k, a in enumerate(mats):
        vals = np.moveaxis(np.tensordot(a, vals, axes=(1, k)), 0, k)
    return vals


def fourier(f: ScalarField, xi_grid: Grid | None = None) -> Spectrum:
    """Ff(xi) = (2pi)^{-d/2} sum_y f(y) e^{-i y.xi} prod(dx)."""
    g = f.grid
    if xi_grid is None:
        xi_grid = conjugate_grid(g)
    mats = []
    for k in range(g.dim):
        x = g.axis(k)
        xi = xi_grid.axis(k)
        mats.append(np.exp(-1j * np.outer(xi, x)) * g.spacing[k])
    vals = _apply_axis_matrices(f.values.astype(complex), mats)
    vals *= (2.0 * math.pi) ** (-g.dim / 2.0)
    return Spectrum(xi_grid, vals)


def inverse_fourier(s: Spectrum, x_grid: Grid) -> np.ndarray:
    """Inverse transform onto x_grid; the spectrum grid must be its conjugate.

    Returns complex values on the grid (callers take .real for real signals).
    """
    if not _grids_close(s.freq_grid, conjugate_grid(x_grid)):
        raise ValueError("grid-mismatch: frequency grid is not the conjugate grid")
    g = s.freq_grid
    mats = []
    for k in range(g.dim):
        xi = g.axis(k)
        x = x_grid.axis(k)
        mats.append(np.exp(1j * np.outer(x, xi)) * g.spacing[k])
    vals = _apply_axis_matrices(s.values, mats)
    return vals * (2.0 * math.pi) ** (-g.dim / 2.0)


def _window_matrix(grid: Grid, q2: np.ndarray) -> np.ndarray:
    """K[x, y] = G[0, q2(x)](x - y) over flattened grid points."""
    pts = grid.points().reshape(-1, grid.dim)
    n = pts.shape[0]
    d = grid.dim
    diff = pts[:, None, :] - pts[None, :, :]
    prec = np.linalg.inv(q2)
    dets = np.linalg.det(q2)
    quad = np.einsum("xyi,xij,xyj->xy", diff, prec, diff)
    norm = (2.0 * math.pi) ** (-d / 2.0) / np.sqrt(dets)
    return norm[:, None] * np.exp(-0.5 * quad)


def adaptive_windowed_fourier(
    f: ScalarField, q_field: MatrixField, xi_grid: Grid | None = None
) -> PhaseSpaceField:
    """F_Q f(x,xi) = pi^{-d/4} sum_y f(y) G_{Q^2(x)}(x-y) e^{-i y.xi} prod(dx)."""
    g = f.grid
    d = g.dim
    if xi_grid is None:
        xi_grid = conjugate_grid(g)
    q = q_field.values.reshape(-1, d, d)
    if np.abs(q - np.swapaxes(q, 1, 2)).max() > 1e-12 * max(1.0, np.abs(q).max()):
        raise ValueError("non-spd-window: asymmetric Q")
    if np.any(np.linalg.eigvalsh(q)[:, 0] <= 0.0):
        raise ValueError("non-spd-window: eigenvalue <= 0")
    q2 = q @ q
    kern = _window_matrix(g, q2)
    pts = g.points().reshape(-1, d)
    xi = xi_grid.points().reshape(-1, d)
    phase = np.exp(-1j * (pts @ xi.T))  # (Ny, Nxi)
    weighted = (f.values.reshape(-1) * g.cell_volume)[:, None] * phase
    vals = math.pi ** (-d / 4.0) * (kern @ weighted)
    return PhaseSpaceField(g, xi_grid, vals.reshape(g.shape + xi_grid.shape))


def windowed_fourier(f: ScalarField, q, xi_grid: Grid | None = None) -> PhaseSpaceField:
    """Constant-window transform; delegates to the adaptive variant so the
    constant-field reduction is bit-for-bit."""
    g = f.grid
    if isinstance(q, SpdMatrix):
        qm = q.entries
    else:
        qm = np.asarray(q, dtype=float)
        if qm.ndim == 0:
            qm = float(qm) * np.eye(g.dim)
    q_field = MatrixField(g, np.broadcast_to(qm, g.shape + qm.shape).copy())
    return adaptive_windowed_fourier(f, q_field, xi_grid=xi_grid)


def wigner_xi_grid(grid: Grid) -> Grid:
    """Frequency grid conjugate to the half-step Wigner correlation lattice."""
    lo, hi, n = [], [], []
    for k in range(grid.dim):
        nk = grid.n[k]
        dxi = math.pi / (2 * nk * grid.spacing[k])
        lo.append(-nk * dxi)
        hi.append((nk - 1) * dxi)
        n.append(2 * nk)
    return make_grid(grid.dim, lo, hi, n)


def wigner(f: ScalarField) -> PhaseSpaceField:
    """Wf(x,xi) = (2pi)^{-d} sum_y f(x+y/2) f(x-y/2) e^{i y.xi} prod(dy).

    Substituting y = 2u keeps x +- u on the grid-point lattice, so the
    correlation product is formed by indexing a zero-padded copy of f and no
    interpolation is needed.  The xi grid is the DFT-conjugate grid of the
    u lattice; with it the xi marginal reproduces |f(x)|^2 exactly.
    """
    g = f.grid
    d = g.dim
    xi_grid = wigner_xi_grid(g)
    fpad = np.zeros(tuple(3 * nk for nk in g.n))
    fpad[tuple(slice(nk, 2 * nk) for nk in g.n)] = f.values
    # correlation C[m, k] = f[m + k] f[m - k], k = -n .. n-1 per axis
    idx_plus, idx_minus = [], []
    for a in range(d):
        na = g.n[a]
        m = np.arange(na)
        kk = np.arange(-na, na)
        shape = [1] * (2 * d)
        shape[a] = na
        shape[d + a] = 2 * na
        idx_plus.append((m[:, None] + kk[None, :] + na).reshape(shape))
        idx_minus.append((m[:, None] - kk[None, :] + na).reshape(shape))
    corr = fpad[tuple(idx_plus)] * fpad[tuple(idx_minus)]
    # DFT over the k axes: exp(i * 2u.xi) = exp(2 pi i k j / (2n)) per axis
    vals = corr.astype(complex)
    for a in range(d):
        na = g.n[a]
        j = np.arange(-na, na)
        kk = np.arange(-na, na)
        e = np.exp(2j * math.pi * np.outer(j, kk) / (2 * na))
        vals = np.moveaxis(np.tensordot(e, vals, axes=(1, d + a)), 0, d + a)
        vals *= 2.0 * g.spacing[a] / (2.0 * math.pi)
    scale = max(1.0, float(np.abs(vals).max()))
    if np.abs(vals.imag).max() > 1e-10 * scale:
        raise ValueError("wigner reality violated: non-negligible imaginary part")
    return PhaseSpaceField(g, xi_grid, vals.real)


def husimi_check(f: ScalarField) -> float:
    """Max residual of the phase-space smoothing identity for the Wigner
    transform: smoothing Wf with the sigma = sqrt(1/2) phase-space Gaussian
    must reproduce the unit-window spectrogram |F_1 f|^2.

    The smoothing kernel is normalized over the 2d-dimensional phase space,
    (2 pi sigma^2)^{-d} exp(-(|x|^2+|xi|^2)/(2 sigma^2)); with the
    R^d-style constant the two sides differ by a constant factor.
    """
    g = f.grid
    d = g.dim
    w = wigner(f)
    sigma2 = 0.5
    # odd-length offset lattices so 'same' convolution stays centered
    off_axes = []
    for k in range(d):
        dx = g.spacing[k]
        m = int(np.ceil(8.0 * math.sqrt(sigma2) / dx))
        off_axes.append(np.arange(-m, m + 1) * dx)
    for k in range(d):
        dxi = w.xi_grid.spacing[k]
        m = int(np.ceil(8.0 * math.sqrt(sigma2) / dxi))
        off_axes.append(np.arange(-m, m + 1) * dxi)
    mesh = np.meshgrid(*off_axes, indexing="ij")
    r2 = sum(o ** 2 for o in mesh)
    kern = (2.0 * math.pi * sigma2) ** (-d) * np.exp(-r2 / (2.0 * sigma2))
    vol = g.cell_volume * w.xi_grid.cell_volume
    smoothed = fftconvolve(w.values, kern, mode="same") * vol
    spec = windowed_fourier(f, 1.0, xi_grid=w.xi_grid)
    return float(np.abs(smoothed - np.abs(spec.values) ** 2).max())
