"""Candidate adaptation functions mu_f computed from a sampled f.

Five variants:
  a: pointwise gradient baseline sqrt((grad f grad f^T + e1 I)/(f^2 + e2))
  b: global spectral-density matrix (spatially constant)
  c: windowed-Fourier covariance with fixed window Q
  d: adaptive-window covariance, solved as a fixed point
  e: Wigner covariance, evaluated at the doubled argument

Ratios of Gaussian-smoothed quantities appear throughout; the squared
Gaussian G_S^2 is proportional to G_{S/2}, and the proportionality constant
cancels in every ratio, so all convolutions below use normalized Gaussian
kernels with half the window covariance.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.signal import fftconvolve

from .grid import (
    Grid,
    MatrixField,
    ScalarField,
    SpdMatrix,
    gradient,
    hessian,
    integrate,
    lp_norm,
    spd_sqrt,
)

__all__ = [
    "MuField",
    "FixedPointReport",
    "pd_repair",
    "mu_gradient_baseline",
    "mu_global_fourier",
    "mu_windowed",
    "mu_adaptive_fixed_point",
    "mu_wigner",
    "constant_mu_field",
    "local_variation_matrix",
]


@dataclasses.dataclass(frozen=True)
class MuField:
    """SPD matrix field of adaptation values, with repair provenance."""

    grid: Grid
    values: np.ndarray  # shape grid.shape + (d, d)
    repaired_mask: np.ndarray  # shape grid.shape, bool
    variant: str = "manual"
    params: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        d = self.grid.dim
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape + (d, d):
            raise ValueError("grid-mismatch: mu values shape")
        m = np.asarray(self.repaired_mask, dtype=bool)
        if m.shape != self.grid.shape:
            raise ValueError("grid-mismatch: repaired mask shape")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "repaired_mask", m)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def matrix_field(self) -> MatrixField:
        return MatrixField(self.grid, self.values)


@dataclasses.dataclass(frozen=True)
class FixedPointReport:
    iterations: int
    final_residual: float
    converged: bool
    lam: float


def constant_mu_field(grid: Grid, m, variant: str = "manual", params=None) -> MuField:
    if isinstance(m, SpdMatrix):
        m = m.entries
    m = np.asarray(m, dtype=float)
    if m.ndim == 0:
        m = float(m) * np.eye(grid.dim)
    vals = np.broadcast_to(m, grid.shape + m.shape).copy()
    return MuField(grid, vals, np.zeros(grid.shape, dtype=bool), variant, params or {})


def pd_repair(m, eps1: float) -> SpdMatrix:
    """Eigen-clamp repair lambda_i -> max(|lambda_i|, eps1)."""
    if isinstance(m, SpdMatrix):
        m = m.entries
    m = np.atleast_2d(np.asarray(m, dtype=float))
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("non-symmetric-input")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    wr = np.maximum(np.abs(w), eps1)
    out = (v * wr) @ v.T
    return SpdMatrix(0.5 * (out + out.T), repaired=bool(np.any(wr != w)), eigen_floor=eps1)


# ---------------------------------------------------------------------------
# batched SPD helpers (values per grid point)

def _batch_spd_sqrt(mats: np.ndarray, floor: np.ndarray | float):
    """Principal square roots of a (..., d, d) stack; eigenvalues below the
    floor are clamped to max(|lambda|, floor).  Returns (roots, repaired)."""
    mats = 0.5 * (mats + np.swapaxes(mats, -1, -2))
    w, v = np.linalg.eigh(mats)
    floor = np.broadcast_to(np.asarray(floor, dtype=float), w.shape[:-1])
    repaired = w[..., 0] < floor
    wr = np.maximum(np.abs(w), floor[..., None])
    root = np.einsum("...ik,...k,...jk->...ij", v, np.sqrt(wr), v)
    return 0.5 * (root + np.swapaxes(root, -1, -2)), repaired


def local_variation_matrix(f: ScalarField, fd_order: int = 4) -> MatrixField:
    """The matrix field grad f grad f^T - f D^2 f.

    For f = G[a, S] this equals f^2 S^{-1} identically, which is what makes
    the Gaussian calibration of the mu variants exact.  Fourth-order interior
    stencils by default: the entries suffer heavy cancellation deep in the
    tails of f, where second-order differences are not accurate enough for
    the calibration tolerances.
    """
    g = gradient(f, order=fd_order).values
    h = hessian(f, order=fd_order).values
    return MatrixField(f.grid, g[..., :, None] * g[..., None, :] - f.values[..., None, None] * h)


# ---------------------------------------------------------------------------
# Gaussian kernels on offset lattices

def _gaussian_kernel(grid: Grid, cov: np.ndarray, nsigma: float = 8.0) -> np.ndarray:
    """Normalized Gaussian sampled on an odd offset lattice of the grid."""
    d = grid.dim
    sig_max = math.sqrt(float(np.linalg.eigvalsh(cov)[-1]))
    axes = []
    for k in range(d):
        m = min(int(math.ceil(nsigma * sig_max / grid.spacing[k])), grid.n[k] - 1)
        axes.append(np.arange(-m, m + 1) * grid.spacing[k])
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    prec = np.linalg.inv(cov)
    quad = np.einsum("...i,ij,...j->...", mesh, prec, mesh)
    norm = (2.0 * math.pi) ** (-d / 2.0) / math.sqrt(np.linalg.det(cov))
    return norm * np.exp(-0.5 * quad)


def _smooth(values: np.ndarray, kernel: np.ndarray, grid: Grid) -> np.ndarray:
    """Grid convolution sum_y v(y) k(x-y) prod(dx) for an odd centered kernel."""
    return fftconvolve(values, kernel, mode="same") * grid.cell_volume


# ---------------------------------------------------------------------------
# variant a

def mu_gradient_baseline(f: ScalarField, eps1: float, eps2: float, fd_order: int = 4) -> MuField:
    if eps1 <= 0.0 or eps2 <= 0.0:
        raise ValueError("regularizers must be positive")
    g = gradient(f, order=fd_order).values
    outer = g[..., :, None] * g[..., None, :]
    d = f.grid.dim
    mats = (outer + eps1 * np.eye(d)) / (f.values ** 2 + eps2)[..., None, None]
    roots, repaired = _batch_spd_sqrt(mats, 0.0)
    return MuField(f.grid, roots, repaired, "a", {"eps1": eps1, "eps2": eps2})


# ---------------------------------------------------------------------------
# variant b

def mu_global_fourier(f: ScalarField, fd_order: int = 4) -> SpdMatrix:
    """Spatially constant mu from the global spectral density."""
    l2 = lp_norm(f, 2)
    if l2 <= 0.0:
        raise ValueError("zero-function")
    g = gradient(f, order=fd_order)
    outer = MatrixField(f.grid, g.values[..., :, None] * g.values[..., None, :])
    return spd_sqrt(integrate(outer) / l2 ** 2)


# ---------------------------------------------------------------------------
# variant c

def mu_windowed(
    f: ScalarField,
    q,
    floor: float = 1e-12,
    fd_order: int = 4,
    nsigma: float = 8.0,
) -> MuField:
    """Windowed-Fourier covariance root:
    sqrt(Q^{-2}/2 + smoothed(grad f grad f^T - f D^2 f)/(2 smoothed(f^2)))
    with smoothing kernel G_{Q^2/2}."""
    grid = f.grid
    d = grid.dim
    qm = q.entries if isinstance(q, SpdMatrix) else np.asarray(q, dtype=float)
    if qm.ndim == 0:
        qm = float(qm) * np.eye(d)
    qm = SpdMatrix(qm).entries
    q2 = qm @ qm
    kernel = _gaussian_kernel(grid, q2 / 2.0, nsigma=nsigma)
    mvals = local_variation_matrix(f, fd_order=fd_order).values
    den = _smooth(f.values ** 2, kernel, grid)
    num = np.empty_like(mvals)
    for i in range(d):
        for j in range(i, d):
            num[..., i, j] = num[..., j, i] = _smooth(mvals[..., i, j], kernel, grid)
    base = np.linalg.inv(q2) / 2.0
    bad = den < floor * max(den.max(), 0.0)
    den_safe = np.where(bad, 1.0, den)
    mats = base + num / (2.0 * den_safe)[..., None, None]
    mats[bad] = base
    roots, repaired = _batch_spd_sqrt(mats, 0.0)
    return MuField(grid, roots, repaired | bad, "c", {"Q": qm})


# ---------------------------------------------------------------------------
# variant d

def _pointwise_smoothed_ratio(
    f2: np.ndarray,
    mvals: np.ndarray,
    grid: Grid,
    covs: np.ndarray,
    nsigma: float,
):
    """At each x: (sum_y M(y) k_x(x-y), sum_y f^2(y) k_x(x-y)) * prod(dx)
    with k_x a normalized Gaussian of per-point covariance covs[x].

    The kernel differs per evaluation point, so this is a direct sum over a
    truncated index window around each x; this is the cost hot spot.
    """
    d = grid.dim
    shape = grid.shape
    covs_flat = covs.reshape(-1, d, d)
    # negligible off-diagonals: factorized per-axis weights, matmul windows
    diag_scale = np.einsum("...ii->...i", covs_flat).min(axis=-1)
    if d == 2 and np.all(np.abs(covs_flat[:, 0, 1]) <= 1e-10 * diag_scale):
        return _pointwise_smoothed_ratio_diag2(f2, mvals, grid, covs_flat, nsigma)
    prec = np.linalg.inv(covs_flat)
    dets = np.linalg.det(covs.reshape(-1, d, d))
    sig_max = np.sqrt(np.linalg.eigvalsh(covs.reshape(-1, d, d))[:, -1])
    f2flat = f2.reshape(-1)
    num = np.empty((f2flat.size, d, d))
    den = np.empty(f2flat.size)
    axes = grid.axes()
    nidx = np.array(grid.n)
    norm0 = (2.0 * math.pi) ** (-d / 2.0) * grid.cell_volume
    idx_nd = np.stack(np.meshgrid(*[np.arange(nk) for nk in grid.n], indexing="ij"), -1).reshape(-1, d)
    for a in range(f2flat.size):
        rad = np.ceil(nsigma * sig_max[a] / grid.spacing).astype(int)
        c = idx_nd[a]
        loi = np.maximum(c - rad, 0)
        hii = np.minimum(c + rad, nidx - 1)
        sl = tuple(slice(loi[k], hii[k] + 1) for k in range(d))
        diffs = [axes[k][sl[k]] - axes[k][c[k]] for k in range(d)]
        mesh = np.stack(np.meshgrid(*diffs, indexing="ij"), axis=-1).reshape(-1, d)
        quad = np.einsum("yi,ij,yj->y", mesh, prec[a], mesh)
        w = norm0 / math.sqrt(dets[a]) * np.exp(-0.5 * quad)
        fw = f2[sl].reshape(-1)
        den[a] = w @ fw
        num[a] = np.einsum("y,yij->ij", w, mvals[sl].reshape(-1, d, d))
    return num.reshape(shape + (d, d)), den.reshape(shape)


def _pointwise_smoothed_ratio_diag2(
    f2: np.ndarray,
    mvals: np.ndarray,
    grid: Grid,
    covs_flat: np.ndarray,
    nsigma: float,
):
    """Separable fast path of _pointwise_smoothed_ratio for d = 2 with
    diagonal per-point kernel covariances: the Gaussian weight factorizes
    into per-axis vectors and each windowed sum becomes two small matmuls."""
    n0, n1 = grid.shape
    dx0, dx1 = grid.spacing
    c0 = covs_flat[:, 0, 0].reshape(n0, n1)
    c1 = covs_flat[:, 1, 1].reshape(n0, n1)
    ax0, ax1 = grid.axes()
    num = np.empty((n0, n1, 2, 2))
    den = np.empty((n0, n1))
    norm0 = grid.cell_volume / (2.0 * math.pi)
    stack = np.stack(
        [f2, mvals[..., 0, 0], mvals[..., 0, 1], mvals[..., 1, 1]], axis=0
    )
    for i0 in range(n0):
        for i1 in range(n1):
            s0 = math.sqrt(c0[i0, i1])
            s1 = math.sqrt(c1[i0, i1])
            r0 = min(int(math.ceil(nsigma * s0 / dx0)), n0 - 1)
            r1 = min(int(math.ceil(nsigma * s1 / dx1)), n1 - 1)
            lo0, hi0 = max(i0 - r0, 0), min(i0 + r0, n0 - 1)
            lo1, hi1 = max(i1 - r1, 0), min(i1 + r1, n1 - 1)
            t0 = ax0[lo0 : hi0 + 1] - ax0[i0]
            t1 = ax1[lo1 : hi1 + 1] - ax1[i1]
            w0 = np.exp(-0.5 * t0 ** 2 / (s0 * s0))
            w1 = np.exp(-0.5 * t1 ** 2 / (s1 * s1))
            win = stack[:, lo0 : hi0 + 1, lo1 : hi1 + 1]
            sums = (w0 @ win) @ w1 * (norm0 / (s0 * s1))
            den[i0, i1] = sums[0]
            num[i0, i1, 0, 0] = sums[1]
            num[i0, i1, 0, 1] = num[i0, i1, 1, 0] = sums[2]
            num[i0, i1, 1, 1] = sums[3]
    return num, den


def mu_adaptive_fixed_point(
    f: ScalarField,
    lam: float = 0.9,
    mu0: MuField | None = None,
    tol: float = 1e-6,
    max_iter: int = 100,
    fd_order: int = 4,
    nsigma: float = 7.0,
    damping: float = 0.0,
):
    """Fixed point of the implicit adaptive-window covariance equation:

      mu(x)^2 = lam^2 mu(x)^2 / 2
                + smoothed_x(grad f grad f^T - f D^2 f)(x) / (2 smoothed_x(f^2)(x))

    where smoothed_x uses the Gaussian kernel of covariance (lam mu(x))^{-2}/2.
    Undamped iteration by default; returns (MuField, FixedPointReport).
    Convergence is not guaranteed in general; non-convergence is reported,
    not raised.
    """
    if not 0.0 < lam < math.sqrt(2.0):
        raise ValueError("lambda-out-of-range: need 0 < lambda < sqrt(2)")
    grid = f.grid
    d = grid.dim
    if mu0 is None:
        mu0 = constant_mu_field(grid, mu_global_fourier(f, fd_order=fd_order), "b")
    f2 = f.values ** 2
    mvals = local_variation_matrix(f, fd_order=fd_order).values
    cur = mu0.values.copy()
    eye = np.eye(d)
    residual = math.inf
    iterations = 0
    repaired = np.zeros(grid.shape, dtype=bool)
    for iterations in range(1, max_iter + 1):
        mu2 = cur @ cur
        covs = np.linalg.inv(mu2) / (2.0 * lam ** 2)
        # windows much narrower than a grid cell degenerate to the center
        # point of the sum; floor their eigenvalues to keep weights finite
        cw, cv = np.linalg.eigh(covs)
        cw = np.maximum(cw, (0.05 * min(grid.spacing)) ** 2)
        covs = np.einsum("...ik,...k,...jk->...ij", cv, cw, cv)
        num, den = _pointwise_smoothed_ratio(f2, mvals, grid, covs, nsigma)
        den = np.maximum(den, 1e-300)
        rhs = lam ** 2 / 2.0 * mu2 + num / (2.0 * den)[..., None, None]
        trace = np.einsum("...ii->...", rhs)
        floor = 1e-12 * np.maximum(np.abs(trace) / d, 1e-300)
        nxt, rep = _batch_spd_sqrt(rhs, floor)
        repaired |= rep
        if damping:
            nxt = (1.0 - damping) * nxt + damping * cur
        diff = np.linalg.norm(nxt - cur, axis=(-2, -1))
        base = np.maximum(np.linalg.norm(cur, axis=(-2, -1)), 1e-300)
        residual = float((diff / base).max())
        cur = nxt
        if residual <= tol:
            break
    report = FixedPointReport(iterations, residual, residual <= tol, lam)
    field = MuField(grid, cur, repaired, "d", {"lambda": lam, "tol": tol})
    return field, report


# ---------------------------------------------------------------------------
# variant e

def _conv_at_doubled(a: np.ndarray, b: np.ndarray, grid: Grid, radius_idx) -> np.ndarray:
    """c[j] = sum_t a[j+t] b[j-t] * prod(dx), the convolution (a * b)(2x_j)
    evaluated on the doubled-argument lattice.

    Direct summation on purpose: the fringe values are many orders of
    magnitude below the peak and an FFT would drown them in absolute error.
    """
    d = grid.dim
    if radius_idx is None:
        rad = [nk - 1 for nk in grid.n]
    else:
        rad = [min(int(r), nk - 1) for r, nk in zip(radius_idx, grid.n)]
    if d == 1:
        r = rad[0]
        n = grid.n[0]
        ap = np.zeros(n + 2 * r)
        bp = np.zeros(n + 2 * r)
        ap[r : r + n] = a
        bp[r : r + n] = b
        out = np.zeros(n)
        for t in range(-r, r + 1):
            out += ap[r + t : r + t + n] * bp[r - t : r - t + n]
        return out * grid.cell_volume
    pad = tuple((rk, rk) for rk in rad)
    ap = np.pad(a, pad)
    bp = np.pad(b, pad)
    out = np.zeros(grid.shape)
    ranges = [range(-rk, rk + 1) for rk in rad]
    n = grid.n
    if d != 2:
        raise NotImplementedError("doubled-argument convolution implemented for d <= 2")
    r0, r1 = rad
    for t0 in ranges[0]:
        sa0 = slice(r0 + t0, r0 + t0 + n[0])
        sb0 = slice(r0 - t0, r0 - t0 + n[0])
        for t1 in ranges[1]:
            out += (
                ap[sa0, r1 + t1 : r1 + t1 + n[1]]
                * bp[sb0, r1 - t1 : r1 - t1 + n[1]]
            )
    return out * grid.cell_volume


def mu_wigner(
    f: ScalarField,
    floor: float = 1e-12,
    fd_order: int = 4,
    window_radius: float | None = None,
) -> MuField:
    """Wigner covariance root:
    sqrt( (f^2 * (grad f grad f^T - f D^2 f))(2x) / (4 (f^2 * f^2)(2x)) ).

    window_radius truncates the correlation sum at |y - x| <= radius per
    axis (physical units); None means the full overlap, exact but O(N^2).
    Points where the denominator falls below floor * max are eigen-clamped
    and flagged as repaired.
    """
    grid = f.grid
    d = grid.dim
    f2 = f.values ** 2
    if not np.any(f2 > 0.0):
        raise ValueError("zero-function")
    mvals = local_variation_matrix(f, fd_order=fd_order).values
    if window_radius is None:
        rad_idx = None
    else:
        rad_idx = np.ceil(window_radius / grid.spacing).astype(int)
    den = _conv_at_doubled(f2, f2, grid, rad_idx)
    num = np.empty(grid.shape + (d, d))
    for i in range(d):
        for j in range(i, d):
            num[..., i, j] = num[..., j, i] = _conv_at_doubled(
                f2, mvals[..., i, j], grid, rad_idx
            )
    bad = den <= floor * max(den.max(), 0.0)
    if floor == 0.0:
        bad = den <= 0.0
    den_safe = np.where(bad, 1.0, den)
    mats = num / (4.0 * den_safe)[..., None, None]
    mats[bad] = np.eye(d)
    trace = np.einsum("...ii->...", mats)
    eig_floor = 1e-12 * np.maximum(np.abs(trace) / d, 1e-300)
    roots, repaired = _batch_spd_sqrt(mats, eig_floor)
    return MuField(grid, roots, repaired | bad, "e", {"floor": floor})
