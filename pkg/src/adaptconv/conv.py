"""Convolution engines.

Generalized kernel convolution, the mu-adaptive convolution for p in [1,inf]
and its derivative rule, the 1D type-two/three adaptive convolutions built
from distances h(x) - h(y), and the continuity-equation current.

The adaptive convolutions are direct O(N^2) sums because the kernel depends
on y through mu(y); when mu is spatially constant, a Fourier fast path with
an identical kernel table is used instead.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.signal import fftconvolve

from .grid import Grid, MatrixField, ScalarField, VectorField, gradient, hessian
from .mu import MuField, constant_mu_field

__all__ = [
    "KernelField",
    "ContinuityInput",
    "generalized_conv",
    "adaptive_conv",
    "adaptive_conv_derivative",
    "type_two_kernel",
    "type_two_conv",
    "type_three_kernel",
    "type_three_conv",
    "continuity_current",
    "continuity_residual",
]


@dataclasses.dataclass(frozen=True)
class KernelField:
    """Two-point kernel G(x, y) materialized over flattened grid points."""

    grid: Grid
    matrix: np.ndarray  # (N, N), rows indexed by x, columns by y
    gamma: float | None = None  # column-norm bound when known

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        n = self.grid.npoints
        if m.shape != (n, n):
            raise ValueError("grid-mismatch: kernel matrix shape")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_function(cls, grid: Grid, fun, gamma: float | None = None):
        pts = grid.points().reshape(-1, grid.dim)
        return cls(grid, fun(pts[:, None, :], pts[None, :, :]), gamma)


def generalized_conv(f: ScalarField, kernel: KernelField) -> ScalarField:
    """(f *bar G)(x) = sum_y f(y) G(x,y) prod(dx)."""
    if f.grid is not kernel.grid and f.grid.shape != kernel.grid.shape:
        raise ValueError("grid-mismatch")
    out = kernel.matrix @ f.values.reshape(-1) * f.grid.cell_volume
    return ScalarField(f.grid, out.reshape(f.grid.shape))


# ---------------------------------------------------------------------------
# mu-adaptive convolution

def _det_weights(mu: MuField, p) -> np.ndarray:
    if p == math.inf:
        return np.ones(mu.grid.shape)
    dets = np.abs(np.linalg.det(mu.values))
    return dets ** (1.0 / float(p))


def _kernel_radius(g: ScalarField) -> float:
    """Half-diagonal of g's box: beyond it every lookup is zero."""
    corners = np.abs(np.stack([g.grid.lo, g.grid.hi]))
    return float(np.linalg.norm(corners.max(axis=0)))


def _check_p(p):
    if p != math.inf and float(p) < 1.0:
        raise ValueError("invalid-p: need p in [1, inf]")


def _mu_is_constant(mu: MuField) -> bool:
    first = mu.values.reshape(-1, mu.dim, mu.dim)[0]
    return bool(np.all(mu.values == first))


def _direct_adaptive_sum(coeffs: np.ndarray, mu: MuField, grid: Grid, kernel_eval, rg: float):
    """out(x) = sum_y coeffs(y) k(mu(y)(x-y); y) prod(dx), truncated per y to
    the index window where the stretched argument can hit the kernel box."""
    d = grid.dim
    out = np.zeros(grid.shape)
    cflat = coeffs.reshape(-1)
    muflat = mu.values.reshape(-1, d, d)
    sig_min = np.linalg.svd(muflat, compute_uv=False)[:, -1]
    idx_nd = np.stack(
        np.meshgrid(*[np.arange(nk) for nk in grid.n], indexing="ij"), -1
    ).reshape(-1, d)
    pts = grid.points()
    nidx = np.array(grid.n)
    vol = grid.cell_volume
    for a in np.nonzero(cflat != 0.0)[0]:
        rad = np.ceil(rg / (max(sig_min[a], 1e-300) * grid.spacing)).astype(np.int64)
        c = idx_nd[a]
        loi = np.maximum(c - rad, 0)
        hii = np.minimum(c + rad, nidx - 1)
        sl = tuple(slice(loi[k], hii[k] + 1) for k in range(d))
        diff = pts[sl] - pts[tuple(c)]
        args = diff @ muflat[a].T
        out[sl] += cflat[a] * vol * kernel_eval(args, a)
    return out


def adaptive_conv(f: ScalarField, g: ScalarField, mu: MuField, p=1.0, method: str = "auto") -> ScalarField:
    """(f *_mu^p g)(x) = sum_y f(y) |det mu(y)|^{1/p} g(mu(y)(x-y)) prod(dx).

    g lives on its own (typically finer and wider) grid and is looked up by
    multilinear interpolation with zero extension; arguments outside g's box
    contribute nothing.  1/p := 0 at p = inf.
    """
    _check_p(p)
    if mu.grid.shape != f.grid.shape:
        raise ValueError("grid-mismatch: mu not on f's grid")
    if method not in ("auto", "direct", "fft"):
        raise ValueError("unknown method")
    detw = _det_weights(mu, p)
    rg = _kernel_radius(g)
    constant = _mu_is_constant(mu)
    if method == "fft" and not constant:
        raise ValueError("fft path requires constant mu")
    if method in ("fft", "auto") and constant:
        grid = f.grid
        d = grid.dim
        m = mu.values.reshape(-1, d, d)[0]
        sig_min = float(np.linalg.svd(m, compute_uv=False)[-1])
        axes = []
        for k in range(d):
            r = int(np.ceil(rg / (max(sig_min, 1e-300) * grid.spacing[k])))
            r = min(r, grid.n[k] - 1)
            axes.append(np.arange(-r, r + 1) * grid.spacing[k])
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        table = g.sample(mesh @ m.T)
        out = fftconvolve(f.values * detw, table, mode="same") * grid.cell_volume
        return ScalarField(grid, out)
    out = _direct_adaptive_sum(
        f.values * detw, mu, f.grid, lambda args, a: g.sample(args), rg
    )
    return ScalarField(f.grid, out)


def adaptive_conv_derivative(
    f: ScalarField,
    g: ScalarField,
    mu: MuField,
    p,
    alpha,
    g_grad: VectorField | None = None,
    g_hess: MatrixField | None = None,
) -> ScalarField:
    """Derivative rule: d^alpha (f *_mu^p g) = (f . alpha(mu)) *_mu^p D^{|alpha|} g.

    Each summand is weighted by the mu(y) columns selected by alpha,
    contracting the gradient/Hessian of g as a multilinear form.  |alpha|
    must be 1 or 2; derivatives of g default to finite differences on g's
    grid (pass analytic ones via g_grad / g_hess for better accuracy).
    """
    _check_p(p)
    alpha = tuple(int(v) for v in alpha)
    d = f.grid.dim
    if len(alpha) != d or any(v < 0 for v in alpha):
        raise ValueError("bad multi-index")
    order = sum(alpha)
    if order not in (1, 2):
        raise ValueError("unsupported-order: need |alpha| in {1, 2}")
    detw = _det_weights(mu, p)
    rg = _kernel_radius(g)
    dd = mu.dim
    if order == 1:
        i = alpha.index(1)
        dg = g_grad if g_grad is not None else gradient(g, order=4)
        muflat = mu.values.reshape(-1, dd, dd)

        def kernel_eval(args, a):
            return dg.sample(args) @ muflat[a][:, i]

    else:
        if 2 in alpha:
            i = j = alpha.index(2)
        else:
            i = alpha.index(1)
            j = alpha.index(1, i + 1)
        hg = g_hess if g_hess is not None else hessian(g, order=4)
        muflat = mu.values.reshape(-1, dd, dd)

        def kernel_eval(args, a):
            h = hg.sample(args)
            return np.einsum("k,ykl,l->y", muflat[a][:, i], h, muflat[a][:, j])

    out = _direct_adaptive_sum(f.values * detw, mu, f.grid, kernel_eval, rg)
    return ScalarField(f.grid, out)


# ---------------------------------------------------------------------------
# type two / three adaptive convolutions (1D)

def _colnorm(mat: np.ndarray, p, dx: float) -> np.ndarray:
    if p == math.inf:
        return np.abs(mat).max(axis=0)
    return (np.abs(mat) ** p).sum(axis=0) ** (1.0 / p) * dx ** (1.0 / p)


def _require_1d(grid: Grid):
    if grid.dim != 1:
        raise ValueError("type two/three convolutions are 1D only")
    if grid.n[0] > 512:
        raise ValueError("type two/three restricted to grids <= 512 points")


def _fun_lp_norm(g, p, lo: float, hi: float, n: int = 8001) -> float:
    z = np.linspace(lo, hi, n)
    vals = np.abs(np.asarray(g(z), dtype=float))
    if p == math.inf:
        return float(vals.max())
    return float(np.trapezoid(vals ** p, z) ** (1.0 / p))


def type_two_kernel(grid: Grid, g, h, p, g_norm: float | None = None) -> KernelField:
    """G_p(x,y) = ||g||_p g(h(x)-h(y)) / ||g(h(.)-h(y))||_p, normalizers by
    quadrature over the x grid."""
    _require_1d(grid)
    _check_p(p)
    x = grid.axis(0)
    hx = np.asarray(h(x), dtype=float)
    k0 = np.asarray(g(hx[:, None] - hx[None, :]), dtype=float)
    dx = grid.spacing[0]
    col = _colnorm(k0, p, dx)
    if np.any(col < 1e-290):
        raise ValueError("degenerate-normalizer")
    if g_norm is None:
        span = float(np.abs(hx).max() + np.abs(hx[:, None] - hx[None, :]).max())
        g_norm = _fun_lp_norm(g, p, -span, span)
    return KernelField(grid, g_norm * k0 / col[None, :], gamma=g_norm)


def type_two_conv(f: ScalarField, g, h, p, g_norm: float | None = None) -> ScalarField:
    return generalized_conv(f, type_two_kernel(f.grid, g, h, p, g_norm=g_norm))


def type_three_kernel(
    grid: Grid,
    g1,
    g2,
    h,
    p,
    z_pad: float = 10.0,
    nz: int = 1024,
    g2_norm: float | None = None,
) -> KernelField:
    """G~_p(x,y) = ||g2||_p int g1(z-h(y)) g2(z-h(x)) / ||g2(z-h(.))||_p dz."""
    _require_1d(grid)
    _check_p(p)
    x = grid.axis(0)
    hx = np.asarray(h(x), dtype=float)
    z = np.linspace(hx.min() - z_pad, hx.max() + z_pad, nz)
    dz = z[1] - z[0]
    a = np.asarray(g2(z[:, None] - hx[None, :]), dtype=float)  # (nz, n)
    b = np.asarray(g1(z[:, None] - hx[None, :]), dtype=float)
    dx = grid.spacing[0]
    if p == math.inf:
        normz = np.abs(a).max(axis=1)
    else:
        normz = (np.abs(a) ** p).sum(axis=1) ** (1.0 / p) * dx ** (1.0 / p)
    if np.any(normz < 1e-290):
        raise ValueError("degenerate-normalizer")
    if g2_norm is None:
        g2_norm = _fun_lp_norm(g2, p, float(z.min() - hx.max()), float(z.max() - hx.min()))
    wz = np.full(nz, dz)
    wz[0] *= 0.5
    wz[-1] *= 0.5
    mat = g2_norm * np.einsum("zx,zy,z->xy", a / normz[:, None], b, wz)
    return KernelField(grid, mat, gamma=None)


def type_three_conv(f: ScalarField, g1, g2, h, p, **kw) -> ScalarField:
    return generalized_conv(f, type_three_kernel(f.grid, g1, g2, h, p, **kw))


# ---------------------------------------------------------------------------
# continuity equation

@dataclasses.dataclass(frozen=True)
class ContinuityInput:
    """One time slice of a density/current pair with its adaptation field.

    drho_dt is informational (the input continuity residual is reported by
    input_residual, never enforced).
    """

    rho: ScalarField
    j: VectorField
    mu: MuField
    dmu_dt: MatrixField
    g: ScalarField
    drho_dt: ScalarField | None = None

    def input_residual(self) -> float:
        if self.drho_dt is None:
            return math.nan
        div = np.zeros(self.rho.grid.shape)
        jg = gradient_of_components(self.j)
        for k in range(self.rho.grid.dim):
            div += jg[k].values[..., k]
        return float(np.abs(self.drho_dt.values + div).max())


def gradient_of_components(vf: VectorField) -> list:
    g = vf.grid
    return [
        gradient(ScalarField(g, vf.values[..., k]), order=2)
        for k in range(g.dim)
    ]


def _vector_kernel(g: ScalarField) -> VectorField:
    pts = g.grid.points()
    return VectorField(g.grid, pts * g.values[..., None])


def continuity_current(inp: ContinuityInput) -> VectorField:
    """Current of the smoothed density:

      j_g = j *_mu g - [mu^{-1} (N + rho dmu/dt) mu^{-1}] *_mu gamma

    with gamma(x) = x g(x) and N_{k,i}(x) = sum_m j_m(x) d_m mu_{k,i}(x).
    All adaptive convolutions use p = 1.
    """
    grid = inp.rho.grid
    d = grid.dim
    mu = inp.mu
    muv = mu.values
    if np.any(np.linalg.eigvalsh(muv.reshape(-1, d, d))[:, 0] <= 0.0):
        raise ValueError("singular-mu")
    detw = np.abs(np.linalg.det(muv))
    rgamma = _vector_kernel(inp.g)
    rg = _kernel_radius(inp.g)

    # N_{k,i} = sum_m j_m d_m mu_{k,i}, entry derivatives by central differences
    nmat = np.zeros(grid.shape + (d, d))
    for k in range(d):
        for i in range(d):
            dmu = gradient(ScalarField(grid, muv[..., k, i]), order=2).values
            nmat[..., k, i] = np.einsum("...m,...m->...", inp.j.values, dmu)

    mu_inv = np.linalg.inv(muv)
    amat = mu_inv @ (nmat + inp.rho.values[..., None, None] * inp.dmu_dt.values) @ mu_inv

    out = np.zeros(grid.shape + (d,))
    for k in range(d):
        # (j *_mu g)_k
        out[..., k] = _direct_adaptive_sum(
            inp.j.values[..., k] * detw, mu, grid,
            lambda args, a: inp.g.sample(args), rg,
        )
        # ([A] *_mu gamma)_k = sum_m A_{k,m}(y) |det mu| gamma_m(mu(y)(x-y))
        for m in range(d):
            out[..., k] -= _direct_adaptive_sum(
                amat[..., k, m] * detw, mu, grid,
                lambda args, a, m=m: rgamma.sample(args)[..., m], rg,
            )
    return VectorField(grid, out)


def continuity_residual(
    prev: ContinuityInput, cur: ContinuityInput, nxt: ContinuityInput, dt: float
) -> float:
    """Max interior residual of d/dt(rho *_mu g) + div j_g, with a central
    time difference of the smoothed density between the t-dt and t+dt slices."""
    grid = cur.rho.grid
    d = grid.dim
    rho_prev = adaptive_conv(prev.rho, prev.g, prev.mu, p=1.0)
    rho_next = adaptive_conv(nxt.rho, nxt.g, nxt.mu, p=1.0)
    drho = (rho_next.values - rho_prev.values) / (2.0 * dt)
    jg = continuity_current(cur)
    div = np.zeros(grid.shape)
    for k in range(d):
        div += gradient(ScalarField(grid, jg.values[..., k]), order=2).values[..., k]
    res = drho + div
    interior = tuple(slice(1, -1) for _ in range(d))
    return float(np.abs(res[interior]).max())
