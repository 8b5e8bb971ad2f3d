"""Regular box grids, sampled fields, finite differences, quadrature, SPD helpers.

Functions on R^d are represented by their samples on a regular grid over a
truncated box [lo, hi].  All lookups outside the box return 0 (zero
extension); test functions are expected to decay below ~1e-12 at the box
edges so the truncation is harmless.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "MatrixField",
    "SpdMatrix",
    "make_grid",
    "gaussian_field",
    "spd_sqrt",
    "gradient",
    "hessian",
    "integrate",
    "lp_norm",
]


@dataclasses.dataclass(frozen=True)
class Grid:
    """Regular grid on a box: points lo_k + j*spacing_k, j = 0..n_k-1."""

    lo: np.ndarray
    hi: np.ndarray
    n: tuple

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.asarray(self.n) - 1)

    @property
    def shape(self) -> tuple:
        return tuple(self.n)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, k: int) -> np.ndarray:
        return self.lo[k] + self.spacing[k] * np.arange(self.n[k])

    def axes(self) -> list:
        return [self.axis(k) for k in range(self.dim)]

    def points(self) -> np.ndarray:
        """All grid points as an array of shape grid.shape + (d,)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def trapezoid_weights(self) -> np.ndarray:
        """Tensor-product trapezoid quadrature weights, shape grid.shape."""
        w = np.ones(self.shape)
        for k in range(self.dim):
            wk = np.full(self.n[k], self.spacing[k])
            wk[0] *= 0.5
            wk[-1] *= 0.5
            shape = [1] * self.dim
            shape[k] = self.n[k]
            w = w * wk.reshape(shape)
        return w


def make_grid(dim, lo, hi, n) -> Grid:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    n = tuple(int(v) for v in np.atleast_1d(n))
    if not (len(lo) == len(hi) == len(n) == dim):
        raise ValueError("grid-mismatch: dim, lo, hi, n must agree")
    if np.any(lo >= hi) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("invalid-bounds: need finite lo < hi on every axis")
    if any(nk < 4 for nk in n):
        raise ValueError("too-few-points: need n_k >= 4")
    lo.setflags(write=False)
    hi.setflags(write=False)
    return Grid(lo, hi, n)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _interp_zero(grid: Grid, values: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of grid samples with zero extension.

    values has shape grid.shape + trailing; pts has shape (..., d).
    Points outside the box evaluate to exactly 0.
    """
    d = grid.dim
    pts = np.asarray(pts, dtype=float)
    pshape = pts.shape[:-1]
    trailing = values.shape[d:]
    p = pts.reshape(-1, d)
    t = (p - grid.lo) / grid.spacing
    nk = np.asarray(grid.n)
    inside = np.all((t >= 0.0) & (t <= nk - 1), axis=1)
    i0 = np.clip(np.floor(t).astype(np.int64), 0, nk - 2)
    frac = t - i0
    vflat = values.reshape(grid.shape + (-1,))
    out = np.zeros((p.shape[0], vflat.shape[-1]))
    for corner in range(2 ** d):
        bits = [(corner >> k) & 1 for k in range(d)]
        idx = tuple(i0[:, k] + bits[k] for k in range(d))
        w = np.ones(p.shape[0])
        for k in range(d):
            w *= frac[:, k] if bits[k] else 1.0 - frac[:, k]
        out += (w * inside)[:, None] * vflat[idx]
    return out.reshape(pshape + trailing)


@dataclasses.dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError("grid-mismatch: values shape != grid shape")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite field values")
        object.__setattr__(self, "values", _freeze(v))

    def sample(self, pts: np.ndarray) -> np.ndarray:
        return _interp_zero(self.grid, self.values, pts)


@dataclasses.dataclass(frozen=True)
class VectorField:
    grid: Grid
    values: np.ndarray  # shape grid.shape + (d,)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape + (self.grid.dim,):
            raise ValueError("grid-mismatch: values shape != grid shape + (d,)")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite field values")
        object.__setattr__(self, "values", _freeze(v))

    def sample(self, pts: np.ndarray) -> np.ndarray:
        return _interp_zero(self.grid, self.values, pts)


@dataclasses.dataclass(frozen=True)
class MatrixField:
    grid: Grid
    values: np.ndarray  # shape grid.shape + (d,d)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        d = self.grid.dim
        if v.shape != self.grid.shape + (d, d):
            raise ValueError("grid-mismatch: values shape != grid shape + (d,d)")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite field values")
        object.__setattr__(self, "values", _freeze(v))

    def sample(self, pts: np.ndarray) -> np.ndarray:
        return _interp_zero(self.grid, self.values, pts)


@dataclasses.dataclass(frozen=True)
class SpdMatrix:
    """Symmetric positive definite matrix with optional repair provenance."""

    entries: np.ndarray
    repaired: bool = False
    eigen_floor: float = 0.0

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise ValueError("non-square matrix")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("non-symmetric-input")
        m = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(m)[0] <= 0.0:
            raise ValueError("non-spd-matrix: eigenvalue <= 0")
        object.__setattr__(self, "entries", _freeze(m))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def inv(self) -> np.ndarray:
        return np.linalg.inv(self.entries)


def _as_matrix(m, dim=None) -> np.ndarray:
    if isinstance(m, SpdMatrix):
        return m.entries
    m = np.asarray(m, dtype=float)
    if m.ndim == 0:
        d = 1 if dim is None else dim
        return float(m) * np.eye(d)
    return np.atleast_2d(m)


def spd_sqrt(m, eigen_floor: float | None = None) -> SpdMatrix:
    """Principal (unique SPD) square root by eigendecomposition.

    Eigenvalues below the floor are clamped to max(|lambda|, floor) and the
    result is flagged as repaired.  Default floor: 1e-10 * trace / d.
    """
    a = _as_matrix(m)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a - a.T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("non-symmetric-input")
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    if eigen_floor is None:
        eigen_floor = 1e-10 * abs(np.trace(a)) / d
    w, v = np.linalg.eigh(a)
    repaired = bool(w[0] < eigen_floor)
    if repaired:
        w = np.maximum(np.abs(w), eigen_floor)
    root = (v * np.sqrt(w)) @ v.T
    return SpdMatrix(0.5 * (root + root.T), repaired=repaired, eigen_floor=float(eigen_floor))


def gaussian_field(grid: Grid, a, cov) -> ScalarField:
    """Normalized Gaussian G[a, cov] sampled on the grid."""
    d = grid.dim
    a = np.atleast_1d(np.asarray(a, dtype=float))
    sigma = _as_matrix(cov, dim=d)
    if sigma.shape != (d, d):
        raise ValueError("non-spd-covariance: wrong shape")
    try:
        sigma = SpdMatrix(sigma).entries
    except ValueError as exc:
        raise ValueError(f"non-spd-covariance: {exc}") from exc
    diff = grid.points() - a
    prec = np.linalg.inv(sigma)
    quad = np.einsum("...i,ij,...j->...", diff, prec, diff)
    norm = (2.0 * math.pi) ** (-d / 2.0) / math.sqrt(np.linalg.det(sigma))
    return ScalarField(grid, norm * np.exp(-0.5 * quad))


# ---------------------------------------------------------------------------
# finite differences

def _diff1_axis(v: np.ndarray, dx: float, axis: int, order: int) -> np.ndarray:
    """First derivative along one axis: central interior, one-sided boundaries."""
    f = np.moveaxis(v, axis, 0)
    out = np.empty_like(f)
    n = f.shape[0]
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    if order == 4 and n >= 6:
        out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * dx)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx)
    return np.moveaxis(out, 0, axis)


def _diff2_axis(v: np.ndarray, dx: float, axis: int, order: int) -> np.ndarray:
    """Second derivative along one axis."""
    f = np.moveaxis(v, axis, 0)
    out = np.empty_like(f)
    n = f.shape[0]
    dx2 = dx * dx
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dx2
    if order == 4 and n >= 6:
        out[2:-2] = (
            -f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]
        ) / (12.0 * dx2)
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / dx2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / dx2
    return np.moveaxis(out, 0, axis)


def gradient(field: ScalarField, order: int = 2) -> VectorField:
    """Finite-difference gradient.

    order=2 (default): central differences in the interior, one-sided
    second-order at the boundary.  order=4 upgrades the interior stencil;
    needed where relative accuracy deep in Gaussian tails matters.
    """
    if order not in (2, 4):
        raise ValueError("unsupported stencil order")
    g = field.grid
    dx = g.spacing
    comps = [_diff1_axis(field.values, dx[k], k, order) for k in range(g.dim)]
    return VectorField(g, np.stack(comps, axis=-1))


def hessian(field: ScalarField, order: int = 2) -> MatrixField:
    """Finite-difference Hessian, symmetrized by (H + H^T)/2."""
    if order not in (2, 4):
        raise ValueError("unsupported stencil order")
    g = field.grid
    d = g.dim
    dx = g.spacing
    h = np.empty(g.shape + (d, d))
    for i in range(d):
        h[..., i, i] = _diff2_axis(field.values, dx[i], i, order)
        for j in range(i + 1, d):
            mixed = _diff1_axis(
                _diff1_axis(field.values, dx[j], j, order), dx[i], i, order
            )
            mixed_t = _diff1_axis(
                _diff1_axis(field.values, dx[i], i, order), dx[j], j, order
            )
            h[..., i, j] = h[..., j, i] = 0.5 * (mixed + mixed_t)
    return MatrixField(g, h)


# ---------------------------------------------------------------------------
# quadrature and norms

def integrate(field) -> np.ndarray | float:
    """Tensor-product trapezoid rule over the grid axes.

    Vector/matrix fields integrate componentwise.
    """
    g = field.grid
    v = field.values
    w = g.trapezoid_weights()
    extra = v.ndim - g.dim
    wv = w.reshape(w.shape + (1,) * extra) * v
    res = wv.sum(axis=tuple(range(g.dim)))
    return float(res) if extra == 0 else res


def lp_norm(field, p) -> float:
    """L^p norm by trapezoid quadrature; p = inf is the max of |values|."""
    if p == math.inf:
        return float(np.abs(field.values).max())
    p = float(p)
    if p < 1.0:
        raise ValueError("invalid-p: need p >= 1")
    g = field.grid
    v = np.abs(field.values)
    extra = v.ndim - g.dim
    if extra:  # Frobenius magnitude per point for vector/matrix fields
        v = np.sqrt((v ** 2).sum(axis=tuple(range(g.dim, v.ndim))))
    w = g.trapezoid_weights()
    return float((w * v ** p).sum() ** (1.0 / p))
