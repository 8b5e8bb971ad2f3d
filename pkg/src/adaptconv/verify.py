"""Property and calibration check registry.

Every check computes a scalar residual-type value and passes when
|value| <= tol.  Checks that assert a quantity EXCEEDS a threshold (ratio
bounds, convergence orders, iteration budgets) are encoded as deficits,
max(0, required - measured), with tol 0, so the same pass rule applies.

The registry backs both the ``verify`` CLI subcommand and the acceptance
test suite; checks are grouped so expensive intermediate results are
shared.  Everything is deterministic: random instances draw from
generators seeded with fixed constants.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .grid import (
    MatrixField,
    ScalarField,
    VectorField,
    gaussian_field,
    gradient,
    hessian,
    integrate,
    lp_norm,
    make_grid,
)
from .transforms import (
    fourier,
    husimi_check,
    inverse_fourier,
    wigner,
    windowed_fourier,
)
from .mu import (
    MuField,
    _pointwise_smoothed_ratio,
    constant_mu_field,
    local_variation_matrix,
    mu_adaptive_fixed_point,
    mu_global_fourier,
    mu_gradient_baseline,
    mu_windowed,
    mu_wigner,
)
from .conv import (
    ContinuityInput,
    adaptive_conv,
    adaptive_conv_derivative,
    continuity_current,
    continuity_residual,
    type_three_conv,
    type_three_kernel,
    type_two_conv,
)
from .vkde import (
    SampleSet,
    calibrate_kappa,
    silverman_bandwidth,
    vkde_fixed_point,
    vkde_sample_point,
)

__all__ = ["CheckResult", "run_checks", "check_names"]

INF = math.inf


@dataclasses.dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return abs(self.value) <= self.tol


_GROUPS = []  # (names, tols, fn) with fn() -> list of values in name order


def _register(names, tols):
    if len(names) != len(tols):
        raise ValueError("names/tols mismatch")

    def deco(fn):
        _GROUPS.append((tuple(names), tuple(tols), fn))
        return fn

    return deco


def check_names() -> list:
    return [n for names, _, _ in _GROUPS for n in names]


def run_checks(name_filter: str | None = None) -> list:
    """Run all groups containing a check whose name matches the filter
    substring (all groups when the filter is None)."""
    out = []
    for names, tols, fn in _GROUPS:
        if name_filter is not None and not any(name_filter in n for n in names):
            continue
        values = fn()
        if len(values) != len(names):
            raise RuntimeError(f"check group {names} returned {len(values)} values")
        for n, v, t in zip(names, values, tols):
            out.append(CheckResult(n, float(v), t))
    return out


def _deficit(required: float, measured: float) -> float:
    """0 when measured >= required, positive shortfall otherwise."""
    return max(0.0, required - measured)


# ---------------------------------------------------------------------------
# shared small builders

def _gauss_1d(grid, sigma=1.0, center=0.0, amp=None):
    x = grid.axis(0)
    a = amp if amp is not None else 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    return ScalarField(grid, a * np.exp(-0.5 * ((x - center) / sigma) ** 2))


def _mix_1d(grid):
    """A smooth asymmetric two-scale 1D test signal."""
    x = grid.axis(0)
    return ScalarField(
        grid, np.exp(-0.5 * x ** 2) + 0.6 * np.exp(-0.5 * ((x - 2.5) / 0.5) ** 2)
    )


def _kernel_field_1d(sigma, half_width, n=8193):
    g = make_grid(1, [-half_width], [half_width], [n])
    return _gauss_1d(g, sigma=sigma)


# ---------------------------------------------------------------------------
# criterion: Gaussian calibration of the Wigner and fixed-point variants

@_register(["calibration-wigner-1d", "calibration-wigner-2d"], [0.02, 0.02])
def _calibration_wigner():
    errs1 = []
    for var in (1.0, 4.0):
        s = math.sqrt(var)
        grid = make_grid(1, [-8.0 * s], [8.0 * s], [513])
        f = gaussian_field(grid, [0.3 * s], [[var]])
        mu = mu_wigner(f, floor=0.0, fd_order=4, window_radius=3.5 * s)
        target = 0.5 / s
        mask = f.values > 1e-6 * f.values.max()
        rel = np.abs(mu.values[..., 0, 0] - target) / target
        errs1.append(rel[mask].max())
    errs2 = []
    for diag in ((1.0, 1.0), (1.0, 4.0)):
        ss = np.sqrt(diag)
        grid = make_grid(2, [-7.0 * ss[0], -7.0 * ss[1]], [7.0 * ss[0], 7.0 * ss[1]], [225, 225])
        f = gaussian_field(grid, [0.0, 0.0], np.diag(diag))
        mu = mu_wigner(f, floor=0.0, fd_order=4, window_radius=3.5 * ss.max())
        target = 0.5 * np.diag(1.0 / ss)
        mask = f.values > 1e-6 * f.values.max()
        rel = np.abs(mu.values - target) / np.abs(target).max()
        errs2.append(rel[mask].max())
    return [max(errs1), max(errs2)]


@_register(["calibration-fixed-point-1d", "calibration-fixed-point-2d"], [0.02, 0.02])
def _calibration_fixed_point():
    lams = (0.6, 0.9, 1.2)
    errs1 = []
    for var in (1.0, 4.0):
        s = math.sqrt(var)
        grid = make_grid(1, [-8.0 * s], [8.0 * s], [513])
        f = gaussian_field(grid, [0.2 * s], [[var]])
        for lam in lams:
            mu, _ = mu_adaptive_fixed_point(f, lam=lam, max_iter=80, nsigma=7.0)
            target = 1.0 / (math.sqrt(2.0 - lam ** 2) * s)
            mask = f.values > 1e-6 * f.values.max()
            rel = np.abs(mu.values[..., 0, 0] - target) / target
            errs1.append(rel[mask].max())
    errs2 = []
    for diag in ((1.0, 1.0), (1.0, 4.0)):
        ss = np.sqrt(diag)
        grid = make_grid(2, [-6.0 * ss[0], -6.0 * ss[1]], [6.0 * ss[0], 6.0 * ss[1]], [127, 127])
        f = gaussian_field(grid, [0.0, 0.0], np.diag(diag))
        for lam in lams:
            mu, _ = mu_adaptive_fixed_point(f, lam=lam, max_iter=80, nsigma=6.0)
            target = np.diag(1.0 / ss) / math.sqrt(2.0 - lam ** 2)
            mask = f.values > 1e-6 * f.values.max()
            rel = np.abs(mu.values - target) / np.abs(target).max()
            errs2.append(rel[mask].max())
    return [max(errs1), max(errs2)]


# ---------------------------------------------------------------------------
# criterion: adaptation axioms

def _all_variants(f, eps=1e-30, q=1.0, lam=0.9, fp_iter=40):
    out = {
        "a": mu_gradient_baseline(f, eps, eps).values,
        "b": np.broadcast_to(
            mu_global_fourier(f).entries, f.grid.shape + (f.grid.dim, f.grid.dim)
        ),
        "c": mu_windowed(f, q).values,
        "e": mu_wigner(f).values,
    }
    mud, _ = mu_adaptive_fixed_point(f, lam=lam, max_iter=fp_iter)
    out["d"] = mud.values
    return out


@_register(["axioms-shift-invariance", "axioms-scalar-invariance"], [1e-8, 1e-8])
def _axioms_shift_scalar():
    grid = make_grid(1, [-12.0], [12.0], [769])
    x = grid.axis(0)

    def fv(t):
        return np.exp(-0.5 * t ** 2) + 0.6 * np.exp(-0.5 * ((t - 2.5) / 0.5) ** 2)

    f = ScalarField(grid, fv(x))
    base = _all_variants(f)
    shift = 64  # grid steps = 2.0
    fs = ScalarField(grid, fv(x - shift * grid.spacing[0]))
    shifted = _all_variants(fs)
    mask = (f.values > 1e-6 * f.values.max()) & (np.abs(x) < 5.0)
    worst_shift = 0.0
    for k in base:
        a = shifted[k][shift:]
        b = base[k][:-shift]
        m = mask[:-shift]
        scale = max(1.0, float(np.abs(b[m]).max()))
        worst_shift = max(worst_shift, float(np.abs(a - b)[m].max()) / scale)
    worst_scalar = 0.0
    for alpha in (-2.0, 0.5, 10.0):
        fa = ScalarField(grid, alpha * fv(x))
        scaled = _all_variants(fa)
        for k in base:
            scale = max(1.0, float(np.abs(base[k][mask]).max()))
            worst_scalar = max(
                worst_scalar, float(np.abs(scaled[k] - base[k])[mask].max()) / scale
            )
    return [worst_shift, worst_scalar]


def _scale_pair_residual(make_f, variant, lo, hi, n, amat, fp_iter=12):
    """max relative deviation in mu^T mu equivariance between f on the base
    grid and f(A.) on the compressed grid (same index lattice)."""
    d = len(lo)
    g1 = make_grid(d, lo, hi, n)
    ainv = np.linalg.inv(amat)
    g2 = make_grid(d, list(ainv @ np.array(lo)), list(ainv @ np.array(hi)), n)
    f1 = ScalarField(g1, make_f(g1.points()))
    f2 = ScalarField(g2, make_f(g2.points() @ amat.T))
    if variant == "d":
        mu1, _ = mu_adaptive_fixed_point(f1, lam=0.9, max_iter=fp_iter)
        mu2, _ = mu_adaptive_fixed_point(f2, lam=0.9, max_iter=fp_iter)
    else:
        mu1 = mu_wigner(f1)
        mu2 = mu_wigner(f2)
    q1 = np.swapaxes(mu1.values, -1, -2) @ mu1.values
    q2 = np.swapaxes(mu2.values, -1, -2) @ mu2.values
    want = amat.T @ q1 @ amat  # index x on g2 corresponds to A x on g1
    mask = (f1.values > 1e-5 * f1.values.max()) & ~mu1.repaired_mask & ~mu2.repaired_mask
    num = np.abs(q2 - want)
    den = np.maximum(np.abs(want), 1e-300)
    return float((num / den)[mask].max())


@_register(["axioms-scale-covariance-d", "axioms-scale-covariance-e"], [1e-5, 1e-5])
def _axioms_scale():
    def f1d(p):
        t = p[..., 0]
        return np.exp(-0.5 * t ** 2) + 0.6 * np.exp(-0.5 * ((t - 2.5) / 0.5) ** 2)

    def f2d(p):
        return np.exp(-0.5 * (p[..., 0] ** 2 + 0.5 * p[..., 1] ** 2)) + 0.5 * np.exp(
            -0.5 * (((p[..., 0] - 1.5) / 0.6) ** 2 + ((p[..., 1] - 1.0) / 0.8) ** 2)
        )

    worst_d = max(
        _scale_pair_residual(f1d, "d", [-8.0], [8.0], [513], np.array([[2.0]])),
        _scale_pair_residual(
            f2d, "d", [-6.0, -6.0], [6.0, 6.0], [65, 65], np.diag([2.0, 0.5])
        ),
    )
    worst_e = max(
        _scale_pair_residual(f1d, "e", [-8.0], [8.0], [513], np.array([[2.0]])),
        _scale_pair_residual(
            f2d, "e", [-6.0, -6.0], [6.0, 6.0], [65, 65], np.diag([2.0, 0.5])
        ),
    )
    return [worst_d, worst_e]


@_register(["axioms-scale-violation-c"], [0.0])
def _axioms_scale_violation():
    def fv(p):
        t = p[..., 0]
        return np.exp(-0.5 * t ** 2) + 0.6 * np.exp(-0.5 * ((t - 2.5) / 0.5) ** 2)

    alpha = 6.0
    g1 = make_grid(1, [-8.0], [8.0], [769])
    g2 = make_grid(1, [-8.0 / alpha], [8.0 / alpha], [769])
    f1 = ScalarField(g1, fv(g1.points()))
    f2 = ScalarField(g2, fv(alpha * g2.points()))
    q1 = mu_windowed(f1, 1.0).values[..., 0, 0] ** 2
    q2 = mu_windowed(f2, 1.0).values[..., 0, 0] ** 2
    want = alpha ** 2 * q1
    mask = f1.values > 1e-3 * f1.values.max()
    violation = float((np.abs(q2 - want) / want)[mask].max())
    return [_deficit(0.10, violation)]


def _three_gauss_locality():
    """mu residuals at the center bump as the side bumps drift away."""
    grid = make_grid(1, [-14.0], [14.0], [897])
    x = grid.axis(0)

    def bump(c, s):
        return np.exp(-0.5 * ((x - c) / s) ** 2)

    f1 = ScalarField(grid, bump(0.0, 1.0))
    mask = np.abs(x) < 0.5
    mud1, _ = mu_adaptive_fixed_point(f1, lam=0.9, max_iter=40, nsigma=14.0)
    mue1 = mu_wigner(f1, floor=0.0)
    res_d, res_e = [], []
    for t in (2, 4, 8):
        f = ScalarField(grid, bump(0.0, 1.0) + 0.8 * (bump(t, 0.7) + bump(-t, 0.7)))
        mud, _ = mu_adaptive_fixed_point(f, lam=0.9, max_iter=40, nsigma=14.0)
        mue = mu_wigner(f, floor=0.0)
        res_d.append(float(np.abs(mud.values - mud1.values)[mask].max()))
        res_e.append(float(np.abs(mue.values - mue1.values)[mask].max()))
    return res_d, res_e


@_register(["axioms-locality-fixed-point", "axioms-locality-wigner-offset"], [0.0, 0.0])
def _axioms_locality():
    res_d, res_e = _three_gauss_locality()
    # strict decrease: each later residual must be smaller than the previous
    dec = 0.0
    for a, b in zip(res_d, res_d[1:]):
        if not b < a:
            dec += (b - a) + 1.0
    offset = _deficit(5.0 * res_d[2], res_e[2])
    return [dec, offset]


# ---------------------------------------------------------------------------
# criterion: shift/scalar/scale identities of the adaptive convolution

@_register(
    ["conv-shift-identity", "conv-scalar-identity", "conv-scale-identity"],
    [1e-4, 1e-4, 1e-4],
)
def _conv_identities():
    grid = make_grid(1, [-8.0], [8.0], [513])
    x = grid.axis(0)

    def fv(t):
        return np.exp(-0.5 * t ** 2) + 0.6 * np.exp(-0.5 * ((t - 2.5) / 0.5) ** 2)

    g = _kernel_field_1d(0.5, 6.0)
    f = ScalarField(grid, fv(x))
    mu, _ = mu_adaptive_fixed_point(f, lam=0.9, max_iter=40)
    out = adaptive_conv(f, g, mu, p=1.0).values
    # shift by 64 grid steps
    shift = 64
    fs = ScalarField(grid, fv(x - shift * grid.spacing[0]))
    mus, _ = mu_adaptive_fixed_point(fs, lam=0.9, max_iter=40)
    outs = adaptive_conv(fs, g, mus, p=1.0).values
    r_shift = float(np.abs(outs[shift:] - out[:-shift]).max())
    # scalar
    fa = ScalarField(grid, 3.0 * fv(x))
    mua, _ = mu_adaptive_fixed_point(fa, lam=0.9, max_iter=40)
    outa = adaptive_conv(fa, g, mua, p=1.0).values
    r_scalar = float(np.abs(outa - 3.0 * out).max())
    # scale by A = 2 on the compressed grid
    grid2 = make_grid(1, [-4.0], [4.0], [513])
    f2 = ScalarField(grid2, fv(2.0 * grid2.axis(0)))
    mu2, _ = mu_adaptive_fixed_point(f2, lam=0.9, max_iter=40)
    out2 = adaptive_conv(f2, g, mu2, p=1.0).values
    r_scale = float(np.abs(out2 - out).max())
    return [r_shift, r_scalar, r_scale]


# ---------------------------------------------------------------------------
# criterion: Young inequalities

def _random_field_1d(grid, rng):
    x = grid.axis(0)
    vals = np.zeros_like(x)
    for _ in range(int(rng.integers(1, 4))):
        a = rng.uniform(-1.5, 1.5)
        s = rng.uniform(0.3, 1.2)
        c = rng.uniform(-1.0, 1.0)
        vals += c * np.exp(-0.5 * ((x - a) / s) ** 2)
    return ScalarField(grid, vals)


@_register(["young-adaptive-convolution"], [0.01])
def _young_adaptive():
    rng = np.random.default_rng(20260824)
    worst = 0.0
    for k in range(50):
        if k % 3 != 2:
            grid = make_grid(1, [-6.0], [6.0], [161])
            f = _random_field_1d(grid, rng)
            sg = rng.uniform(0.3, 1.0)
            ggrid = make_grid(1, [-8.0], [8.0], [2049])
            g = ScalarField(ggrid, np.exp(-0.5 * (ggrid.axis(0) / sg) ** 2))
            mvals = rng.uniform(0.3, 3.0, grid.shape)[..., None, None]
            mu = MuField(grid, mvals, np.zeros(grid.shape, bool))
        else:
            grid = make_grid(2, [-4.0, -4.0], [4.0, 4.0], [33, 33])
            pts = grid.points()
            vals = np.zeros(grid.shape)
            for _ in range(2):
                a = rng.uniform(-1.0, 1.0, 2)
                s = rng.uniform(0.4, 1.0)
                c = rng.uniform(-1.0, 1.0)
                vals += c * np.exp(-0.5 * ((pts - a) ** 2).sum(-1) / s ** 2)
            f = ScalarField(grid, vals)
            sg = rng.uniform(0.4, 1.0)
            ggrid = make_grid(2, [-5.0, -5.0], [5.0, 5.0], [151, 151])
            g = ScalarField(ggrid, np.exp(-0.5 * (ggrid.points() ** 2).sum(-1) / sg ** 2))
            # random SPD field with condition number <= 100
            th = rng.uniform(0.0, math.pi, grid.shape)
            l1 = rng.uniform(0.3, 3.0, grid.shape)
            l2 = l1 * rng.uniform(0.1, 1.0, grid.shape)
            ct, st = np.cos(th), np.sin(th)
            rot = np.stack(
                [np.stack([ct, -st], -1), np.stack([st, ct], -1)], -2
            )
            lam = np.zeros(grid.shape + (2, 2))
            lam[..., 0, 0] = l1
            lam[..., 1, 1] = l2
            mu = MuField(grid, rot @ lam @ np.swapaxes(rot, -1, -2), np.zeros(grid.shape, bool))
        for p in (1.0, 2.0, INF):
            lhs = lp_norm(adaptive_conv(f, g, mu, p=p), p)
            worst = max(worst, lhs / (lp_norm(f, 1) * lp_norm(g, p)) - 1.0)
    return [worst]


def _fun_norm(fun, p, lo, hi, n=20001):
    z = np.linspace(lo, hi, n)
    v = np.abs(np.asarray(fun(z), dtype=float))
    if p == INF:
        return float(v.max())
    return float(np.trapezoid(v ** p, z) ** (1.0 / p))


@_register(
    [
        "young-type-two",
        "young-type-three",
        "young-general-triple",
        "young-kernel-symmetry",
    ],
    [0.01, 0.01, 0.01, 1e-10],
)
def _young_appendix():
    rng = np.random.default_rng(7)
    worst2 = worst3 = worstg = sym = 0.0
    for k in range(20):
        grid = make_grid(1, [-5.0], [5.0], [201])
        f = _random_field_1d(grid, rng)
        s1 = rng.uniform(0.4, 1.0)
        s2 = rng.uniform(0.4, 1.0)
        g1 = lambda u, s=s1: np.exp(-0.5 * (u / s) ** 2)
        g2 = lambda u, s=s2: np.exp(-0.5 * (u / s) ** 2)
        c = rng.uniform(0.1, 0.6)
        h = lambda u, c=c: u + c * np.sin(u)
        p = (1.0, 2.0, INF)[k % 3]
        pad = 3.5 * max(s1, s2)
        out2 = type_two_conv(f, g1, h, p)
        worst2 = max(worst2, lp_norm(out2, p) / (lp_norm(f, 1) * _fun_norm(g1, p, -30, 30)) - 1.0)
        out3 = type_three_conv(f, g1, g2, h, p, z_pad=pad)
        worst3 = max(
            worst3,
            lp_norm(out3, p)
            / (lp_norm(f, 1) * _fun_norm(g1, 1, -30, 30) * _fun_norm(g2, p, -30, 30))
            - 1.0,
        )
        km = type_three_kernel(grid, g1, g1, h, p, z_pad=3.5 * s1)
        sym = max(sym, float(np.abs(km.matrix - km.matrix.T).max()))
        pq, qq, rq = 1.5, 1.5, 3.0
        outg = type_three_conv(f, g1, g1, h, pq, z_pad=3.5 * s1)
        worstg = max(
            worstg,
            lp_norm(outg, rq)
            / (lp_norm(f, qq) * _fun_norm(g1, 1, -30, 30) * _fun_norm(g1, pq, -30, 30))
            - 1.0,
        )
    return [worst2, worst3, worstg, sym]


# ---------------------------------------------------------------------------
# criterion: mass preservation at p = 1

@_register(["mass-preservation"], [1e-8])
def _mass_preservation():
    grid = make_grid(1, [-14.0], [14.0], [897])
    x = grid.axis(0)
    f = ScalarField(grid, np.exp(-0.5 * x ** 2) + 0.6 * np.exp(-0.5 * ((x - 2.5) / 0.5) ** 2))
    g = _kernel_field_1d(0.5, 6.0, n=262145)
    mvals = (1.0 + 0.3 * np.tanh(x))[..., None, None]
    mu = MuField(grid, mvals, np.zeros(grid.shape, bool))
    out = adaptive_conv(f, g, mu, p=1.0)
    return [abs(lp_norm(out, 1) - lp_norm(f, 1))]


# ---------------------------------------------------------------------------
# criterion: derivative rule convergence

@_register(
    ["derivative-rule-first-order", "derivative-rule-second-order"], [0.0, 0.0]
)
def _derivative_rule():
    sg = 0.6
    ggrid = make_grid(1, [-6.0], [6.0], [16385])
    xg = ggrid.axis(0)
    gv = np.exp(-0.5 * (xg / sg) ** 2)
    g = ScalarField(ggrid, gv)
    g_grad = VectorField(ggrid, (-xg / sg ** 2 * gv)[:, None])
    g_hess = MatrixField(ggrid, ((xg ** 2 / sg ** 4 - 1.0 / sg ** 2) * gv)[:, None, None])
    r1, r2 = [], []
    for n in (65, 129, 257):
        grid = make_grid(1, [-6.0], [6.0], [n])
        x = grid.axis(0)
        f = ScalarField(grid, np.exp(-0.5 * x ** 2))
        mu = MuField(grid, (1.0 + 0.3 * np.tanh(x))[:, None, None], np.zeros(grid.shape, bool))
        base = adaptive_conv(f, g, mu, p=1.0)
        d1 = adaptive_conv_derivative(f, g, mu, 1.0, (1,), g_grad=g_grad)
        d2 = adaptive_conv_derivative(f, g, mu, 1.0, (2,), g_hess=g_hess)
        fd1 = gradient(base, order=2).values[:, 0]
        fd2 = hessian(base, order=2).values[:, 0, 0]
        sl = slice(4, -4)
        r1.append(float(np.abs(d1.values - fd1)[sl].max()))
        r2.append(float(np.abs(d2.values - fd2)[sl].max()))
    o1 = min(math.log2(r1[i] / r1[i + 1]) for i in range(2))
    o2 = min(math.log2(r2[i] / r2[i + 1]) for i in range(2))
    return [_deficit(1.8, o1), _deficit(1.8, o2)]


# ---------------------------------------------------------------------------
# criterion: continuity equation

def _continuity_inputs(grid, t, g, mu_fun, v=0.4):
    x = grid.axis(0)
    rho = np.exp(-0.5 * (x - v * t) ** 2) / math.sqrt(2.0 * math.pi)
    m, dm = mu_fun(t)
    mu = constant_mu_field(grid, m)
    dmu = MatrixField(grid, np.full(grid.shape + (1, 1), dm))
    return ContinuityInput(
        ScalarField(grid, rho), VectorField(grid, (v * rho)[..., None]), mu, dmu, g
    )


@_register(
    ["continuity-residual-order", "continuity-constant-mu-corollary"], [0.0, 1e-8]
)
def _continuity():
    g = _kernel_field_1d(0.7, 6.0, n=65537)
    t0 = 0.3
    orders = []
    for mu_fun in (
        lambda t: (1.0, 0.0),
        lambda t: (1.0 + 0.1 * math.sin(t), 0.1 * math.cos(t)),
    ):
        res = []
        for n, dt in ((129, 0.1), (257, 0.05), (513, 0.025)):
            grid = make_grid(1, [-8.0], [8.0], [n])
            res.append(
                continuity_residual(
                    _continuity_inputs(grid, t0 - dt, g, mu_fun),
                    _continuity_inputs(grid, t0, g, mu_fun),
                    _continuity_inputs(grid, t0 + dt, g, mu_fun),
                    dt,
                )
            )
        orders.append(min(math.log2(res[i] / res[i + 1]) for i in range(2)))
    # corollary: space-constant, time-dependent scaling
    grid = make_grid(1, [-8.0], [8.0], [257])
    x = grid.axis(0)
    v = 0.4
    rho = np.exp(-0.5 * (x - v * t0) ** 2) / math.sqrt(2.0 * math.pi)
    jv = v * rho
    a = 1.0 + 0.1 * math.sin(t0)
    da = 0.1 * math.cos(t0)
    inp = ContinuityInput(
        ScalarField(grid, rho),
        VectorField(grid, jv[..., None]),
        constant_mu_field(grid, a),
        MatrixField(grid, np.full(grid.shape + (1, 1), da)),
        g,
    )
    got = continuity_current(inp).values[..., 0]
    sg = 0.7
    dx = grid.spacing[0]
    diff = x[:, None] - x[None, :]
    ga = abs(a) * np.exp(-0.5 * (a * diff / sg) ** 2) / (sg * math.sqrt(2.0 * math.pi))
    gamma_a = ga * (a * diff)
    ref = ga @ jv * dx - gamma_a @ (rho * (da / a ** 2)) * dx
    corr = float(np.abs(got - ref).max())
    return [_deficit(1.8, min(orders)), corr]


# ---------------------------------------------------------------------------
# criterion: transforms

@_register(
    [
        "transforms-plancherel",
        "transforms-inversion",
        "transforms-wigner-marginals",
        "transforms-husimi-gaussian",
        "transforms-husimi-two-bump",
        "transforms-wigner-scaling",
        "transforms-fourier-scaling",
    ],
    [1e-8, 1e-8, 1e-6, 1e-4, 1e-3, 1e-6, 1e-8],
)
def _transforms():
    grid = make_grid(1, [-10.0], [10.0], [256])
    x = grid.axis(0)
    f = ScalarField(grid, np.exp(-0.5 * x ** 2) * np.cos(2.0 * x) + 0.4 * np.exp(-0.5 * (x - 2.0) ** 2))
    spec = fourier(f)
    l2_f = math.sqrt(float(np.sum(f.values ** 2)) * grid.cell_volume)
    l2_s = math.sqrt(float(np.sum(np.abs(spec.values) ** 2)) * spec.freq_grid.cell_volume)
    plancherel = abs(l2_s - l2_f)
    back = inverse_fourier(spec, grid)
    inversion = float(np.abs(back.real - f.values).max() + np.abs(back.imag).max())
    # Wigner marginals on a multi-frequency signal
    wgrid = make_grid(1, [-12.0], [12.0], [385])
    xw = wgrid.axis(0)
    fw = ScalarField(
        wgrid,
        np.exp(-0.5 * (xw + 4.0) ** 2) * np.cos(2.0 * xw)
        + np.exp(-0.5 * (xw - 4.0) ** 2) * np.cos(5.0 * xw),
    )
    w = wigner(fw)
    dxi = w.xi_grid.spacing[0]
    m_xi = float(np.abs(w.values.sum(axis=-1) * dxi - fw.values ** 2).max())
    specw = fourier(fw, xi_grid=w.xi_grid)
    m_x = float(
        np.abs(w.values.sum(axis=0) * wgrid.spacing[0] - np.abs(specw.values) ** 2).max()
    )
    # Husimi residuals
    hgrid = make_grid(1, [-9.0], [9.0], [129])
    xh = hgrid.axis(0)
    hus_g = husimi_check(ScalarField(hgrid, np.exp(-0.5 * xh ** 2)))
    hus_b = husimi_check(
        ScalarField(hgrid, np.exp(-0.5 * (xh + 2.0) ** 2) + 0.8 * np.exp(-0.5 * ((xh - 2.0) / 0.7) ** 2))
    )
    # scaling laws with alpha = 2 on matched grid pairs
    alpha = 2.0
    g1 = make_grid(1, [-8.0], [8.0], [256])
    g2 = make_grid(1, [-4.0], [4.0], [256])
    fv = lambda t: np.exp(-0.5 * t ** 2) * (1.0 + 0.3 * np.sin(1.5 * t))
    f1 = ScalarField(g1, fv(g1.axis(0)))
    f2 = ScalarField(g2, fv(alpha * g2.axis(0)))
    w1 = wigner(f1)
    w2 = wigner(f2)
    wig_scale = float(np.abs(w2.values - w1.values / alpha).max())
    s1 = fourier(f1)
    xi2 = make_grid(
        1, [s1.freq_grid.lo[0] * alpha], [s1.freq_grid.hi[0] * alpha], [256]
    )
    s2 = fourier(f2, xi_grid=xi2)
    fr_scale = float(np.abs(s2.values - s1.values / alpha).max())
    return [plancherel, inversion, max(m_xi, m_x), hus_g, hus_b, wig_scale, fr_scale]


# ---------------------------------------------------------------------------
# criterion: covariance oracles

@_register(["covariance-oracle-windowed", "covariance-oracle-wigner"], [1e-4, 1e-3])
def _covariance_oracles():
    grid = make_grid(1, [-10.0], [10.0], [513])
    x = grid.axis(0)
    f = ScalarField(grid, np.exp(-0.5 * x ** 2) + 0.7 * np.exp(-0.5 * ((x - 3.0) / 0.6) ** 2))
    w = windowed_fourier(f, 1.0)
    xi = w.xi_grid.axis(0)
    dxi = w.xi_grid.spacing[0]
    dens = np.abs(w.values) ** 2
    cov = (dens * xi ** 2).sum(axis=-1) / dens.sum(axis=-1)
    muc2 = mu_windowed(f, 1.0).values[..., 0, 0] ** 2
    mask = f.values > 1e-3 * f.values.max()
    err_c = float(np.abs(muc2 - cov)[mask].max())
    wg = wigner(f)
    xiw = wg.xi_grid.axis(0)
    dens = wg.values ** 2
    cov = (dens * xiw ** 2).sum(axis=-1) / dens.sum(axis=-1)
    mue = mu_wigner(f)
    mue2 = mue.values[..., 0, 0] ** 2
    mask = (f.values > 1e-3 * f.values.max()) & ~mue.repaired_mask
    err_e = float(np.abs(mue2 - cov)[mask].max())
    del dxi
    return [err_c, err_e]


# ---------------------------------------------------------------------------
# criterion: fixed-point solver budget and equation residual

@_register(
    ["fixed-point-iteration-budget", "fixed-point-equation-residual"], [0.0, 1e-6]
)
def _fixed_point_solver():
    lam = 0.9
    grid = make_grid(1, [-8.0], [8.0], [513])
    f = gaussian_field(grid, [0.0], [[1.0]])
    mu, rep = mu_adaptive_fixed_point(f, lam=lam, tol=1e-6, max_iter=40)
    budget = max(0.0, rep.iterations - 30.0) + (0.0 if rep.converged else 1.0)
    f2 = f.values ** 2
    mvals = local_variation_matrix(f, fd_order=4).values
    mu2 = mu.values @ mu.values
    covs = np.linalg.inv(mu2) / (2.0 * lam ** 2)
    num, den = _pointwise_smoothed_ratio(f2, mvals, f.grid, covs, 7.0)
    rhs = lam ** 2 / 2.0 * mu2 + num / (2.0 * np.maximum(den, 1e-300))[..., None, None]
    rel = np.abs(rhs - mu2) / np.maximum(np.abs(mu2), 1e-300)
    mask = f.values > 1e-6 * f.values.max()
    return [budget, float(rel[mask].max())]


# ---------------------------------------------------------------------------
# criterion: the two-plateau worked example

def smooth1d_component(x, amp=0.1, om=6.0, s=0.7):
    """Base signal of the two-plateau example: a Gaussian bump carrying a
    small ripple, so the local variation is set by the ripple scale."""
    return np.exp(-0.5 * (x / s) ** 2) * (1.0 + amp * np.sin(om * x))


@_register(
    [
        "plateau-manual-mu-match",
        "plateau-wigner-ratio",
        "plateau-degenerate-variation",
    ],
    [0.05, 0.0, 0.0],
)
def _plateau_example():
    a, alpha, sg = 8.0, 6.0, 0.4
    grid = make_grid(1, [-6.0], [10.0], [1537])
    x = grid.axis(0)
    f = ScalarField(grid, smooth1d_component(x) + smooth1d_component(alpha * (x - a)))
    g = _kernel_field_1d(sg, 5.0)
    muv = np.where(x < 7.0, 1.0, alpha)[:, None, None]
    mu = MuField(grid, muv, np.zeros(grid.shape, bool))
    out = adaptive_conv(f, g, mu, p=1.0)
    # reference: (f1 * g)(alpha (x - a)) by fine quadrature
    yy = np.linspace(-6.0, 6.0, 8001)
    right = x >= 7.5
    args = alpha * (x[right] - a)
    kern = np.exp(-0.5 * ((args[:, None] - yy[None, :]) / sg) ** 2) / (
        sg * math.sqrt(2.0 * math.pi)
    )
    ref = np.trapezoid(smooth1d_component(yy)[None, :] * kern, yy, axis=1)
    match = float(np.abs(out.values[right] - ref).max() / np.abs(ref).max())
    # automatic mu^(e) plateau ratio on a finer grid resolving the alpha = 6
    # ripple on the doubled-argument correlation lattice
    gridr = make_grid(1, [-6.0], [10.0], [3073])
    xr = gridr.axis(0)
    fr = ScalarField(gridr, smooth1d_component(xr) + smooth1d_component(alpha * (xr - a)))
    mue = mu_wigner(fr, fd_order=4).values[:, 0, 0]
    left = np.abs(xr) < 1.0
    rightc = np.abs(xr - a) < 1.0 / alpha
    ratio = float(np.median(mue[rightc]) / np.median(mue[left]))
    ratio_dev = max(0.0, 5.4 - ratio) + max(0.0, ratio - 6.6)
    # degenerate alpha = 1: mu^(e) nearly constant across the bumps
    grid1 = make_grid(1, [-6.0], [14.0], [2049])
    x1 = grid1.axis(0)
    f1 = ScalarField(grid1, smooth1d_component(x1) + smooth1d_component(x1 - a))
    m1 = mu_wigner(f1, fd_order=4).values[:, 0, 0]
    wsup = np.abs(x1) < 1.5
    cov = float(m1[wsup].std() / m1[wsup].mean())
    return [match, ratio_dev, max(0.0, cov - 0.10)]


# ---------------------------------------------------------------------------
# criterion: VKDE

@_register(
    [
        "vkde-silverman-reference",
        "vkde-normalization",
        "vkde-scaling-identity",
        "vkde-two-scale-separation",
        "vkde-single-cluster-convergence",
        "vkde-statistical-limit",
    ],
    [1e-4, 1e-6, 1e-8, 0.0, 0.0, 0.05],
)
def _vkde_checks():
    silver = abs(silverman_bandwidth(1, 100) - 0.4216846063427500)
    rng = np.random.default_rng(42)
    pts = rng.normal(size=(40, 1))
    m = rng.uniform(0.5, 5.0, 40)
    est = vkde_sample_point(SampleSet(pts), m)
    wide = make_grid(1, [-12.0], [12.0], [4001])
    normalization = abs(integrate(est.field(wide)) - 1.0)
    alpha = 1.7
    est2 = vkde_sample_point(SampleSet(pts / alpha), m * alpha)
    xs = np.linspace(-3.0, 3.0, 101)[:, None]
    scaling = float(np.abs(est2.at(xs) - alpha * est.at(alpha * xs)).max())
    # two-scale mixture
    n2 = 800
    a1 = rng.normal(size=(n2 // 2, 1))
    a2 = 4.0 + rng.normal(size=(n2 // 2, 1)) / 6.0
    ss = SampleSet(np.vstack([a1, a2]))
    bw, rep = vkde_fixed_point(ss, calibrate_kappa(ss, 0.5), 0.5)
    ratio = float(np.median(bw.m[n2 // 2 :]) / np.median(bw.m[: n2 // 2]))
    sep = _deficit(2.0, ratio) + (0.0 if rep.converged else 1.0)
    # single cluster
    ss3 = SampleSet(rng.normal(size=(50, 1)))
    bw3, rep3 = vkde_fixed_point(ss3, calibrate_kappa(ss3, 0.5), 0.5, max_iter=60)
    single = 0.0 if rep3.converged else 1.0 + rep3.final_residual
    # statistical pointwise-limit check at N = 10^4
    n4 = 10 ** 4
    y = rng.normal(size=(n4, 1))
    mlaw = lambda t: 1.5 + 0.5 * np.tanh(t)
    est4 = vkde_sample_point(SampleSet(y), mlaw(y[:, 0]))
    fg = make_grid(1, [-6.0], [6.0], [601])
    x = fg.axis(0)
    emp = est4.at(x[:, None])
    rho = ScalarField(fg, np.exp(-0.5 * x ** 2) / math.sqrt(2.0 * math.pi))
    muf = MuField(fg, mlaw(x)[:, None, None], np.zeros(fg.shape, bool))
    kg = _kernel_field_1d(1.0, 8.0, n=4001)
    lim = adaptive_conv(rho, kg, muf, p=1.0)
    l1 = float(np.trapezoid(np.abs(emp - lim.values), x))
    return [silver, normalization, scaling, sep, single, l1]
