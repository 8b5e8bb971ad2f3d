"""Scenario runner command line interface.

Subcommands reproduce the worked examples (two-plateau smoothing, banana
density, three drifting Gaussians, the VKDE fixed point, phase-space
transforms) and run the full property suite.  Each scenario writes CSV
fields plus a JSON RunReport; everything is deterministic given the seed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .grid import MatrixField, ScalarField, integrate, lp_norm, make_grid
from .transforms import fourier, wigner, windowed_fourier
from .mu import MuField, mu_adaptive_fixed_point, mu_windowed, mu_wigner
from .conv import adaptive_conv
from .vkde import SampleSet, calibrate_kappa, vkde_fixed_point, vkde_sample_point
from .verify import CheckResult, _deficit, _three_gauss_locality, run_checks
from .verify import smooth1d_component

__all__ = [
    "ScenarioSpec",
    "RunReport",
    "run_smooth1d",
    "run_banana2d",
    "run_threegauss",
    "run_vkde_demo",
    "run_phasespace",
    "run_verify",
    "main",
]


@dataclasses.dataclass(frozen=True)
class ScenarioSpec:
    name: str
    grid_n: int | None = None
    grid_lo: float | None = None
    grid_hi: float | None = None
    sigma: float | None = None
    lam: float = 0.9
    q: float = 1.0
    kappa: float | None = None
    beta: float = 0.5
    seed: int = 0
    out_dir: str = "."
    check_filter: str | None = None
    extras: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.lam < math.sqrt(2.0):
            raise ValueError("lambda-out-of-range: need 0 < lambda < sqrt(2)")
        if self.q <= 0.0 or self.beta <= 0.0:
            raise ValueError("nonpositive-parameter: Q and beta must be > 0")
        if self.sigma is not None and self.sigma <= 0.0:
            raise ValueError("nonpositive-parameter: sigma must be > 0")
        if self.grid_n is not None and self.grid_n < 4:
            raise ValueError("too-few-points: need grid_n >= 4")


@dataclasses.dataclass(frozen=True)
class RunReport:
    scenario: str
    checks: list
    wall_ms: float
    version: str
    params: dict = dataclasses.field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        doc = {
            "scenario": self.scenario,
            "checks": [
                {"name": c.name, "value": c.value, "tol": c.tol, "pass": c.passed}
                for c in self.checks
            ],
            "wall_ms": self.wall_ms,
            "version": self.version,
            "params": self.params,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12e")


def write_csv(path: str, header: list, columns: list) -> None:
    """Comma-separated, LF line endings, floats with 13 significant digits."""
    if len(header) != len(columns):
        raise ValueError("header/column mismatch")
    cols = [np.asarray(c).reshape(-1) for c in columns]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _finish(spec: ScenarioSpec, checks: list, t0: float, params: dict) -> RunReport:
    report = RunReport(
        spec.name, checks, (time.perf_counter() - t0) * 1000.0, __version__, params
    )
    path = os.path.join(spec.out_dir, f"{spec.name}_report.json")
    with open(path, "w", newline="\n") as fh:
        fh.write(report.to_json())
    return report


# ---------------------------------------------------------------------------
# smooth1d: two plateaus of differing local variation

def run_smooth1d(spec: ScenarioSpec) -> RunReport:
    t0 = time.perf_counter()
    lo = -6.0 if spec.grid_lo is None else spec.grid_lo
    hi = 10.0 if spec.grid_hi is None else spec.grid_hi
    n = 1537 if spec.grid_n is None else spec.grid_n
    sigma = 0.4 if spec.sigma is None else spec.sigma
    a, alpha = 8.0, 6.0
    grid = make_grid(1, [lo], [hi], [n])
    x = grid.axis(0)
    f = ScalarField(grid, smooth1d_component(x) + smooth1d_component(alpha * (x - a)))

    kg = make_grid(1, [-12.5 * sigma], [12.5 * sigma], [8193])
    xg = kg.axis(0)
    g = ScalarField(kg, np.exp(-0.5 * (xg / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi)))
    gt = ScalarField(kg, alpha * np.exp(-0.5 * (alpha * xg / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi)))

    ident = MuField(grid, np.ones(grid.shape + (1, 1)), np.zeros(grid.shape, bool))
    conv_g = adaptive_conv(f, g, ident, p=1.0)
    conv_gt = adaptive_conv(f, gt, ident, p=1.0)
    manual = MuField(grid, np.where(x < 7.0, 1.0, alpha)[:, None, None], np.zeros(grid.shape, bool))
    conv_manual = adaptive_conv(f, g, manual, p=1.0)
    mu_c = mu_windowed(f, spec.q)
    mu_d, fp_report = mu_adaptive_fixed_point(f, lam=spec.lam, max_iter=25, damping=0.5)
    mu_e = mu_wigner(f)
    conv_d = adaptive_conv(f, g, mu_d, p=1.0)
    conv_e = adaptive_conv(f, g, mu_e, p=1.0)

    write_csv(
        os.path.join(spec.out_dir, "smooth1d.csv"),
        ["x", "f", "conv_g", "conv_gtilde", "conv_mu_manual", "mu_c", "mu_d", "mu_e", "conv_mu_d", "conv_mu_e"],
        [x, f.values, conv_g.values, conv_gt.values, conv_manual.values,
         mu_c.values[:, 0, 0], mu_d.values[:, 0, 0], mu_e.values[:, 0, 0],
         conv_d.values, conv_e.values],
    )
    checks = run_checks("plateau")
    params = {
        "a": a, "alpha": alpha, "sigma": sigma, "lambda": spec.lam, "Q": spec.q,
        "fixed_point_converged": fp_report.converged,
        "fixed_point_iterations": fp_report.iterations,
    }
    return _finish(spec, checks, t0, params)


# ---------------------------------------------------------------------------
# banana2d: strongly deformed Gaussian

def banana_density(grid, alpha=4.0, sigma=5.0) -> ScalarField:
    pts = grid.points()
    x1, x2 = pts[..., 0], pts[..., 1]
    vals = np.exp(-0.5 * ((x1 / sigma) ** 2 + (x2 - alpha * (x1 / sigma) ** 2) ** 2))
    return ScalarField(grid, vals / (2.0 * math.pi * sigma))


def clip_mu(mu: MuField, lo: float, hi: float) -> MuField:
    """Eigenvalue-clipped copy; keeps stretched kernels resolvable on the
    grid and inside the box without touching the reported mu field."""
    w, v = np.linalg.eigh(0.5 * (mu.values + np.swapaxes(mu.values, -1, -2)))
    w = np.clip(w, lo, hi)
    vals = np.einsum("...ik,...k,...jk->...ij", v, w, v)
    return MuField(mu.grid, vals, mu.repaired_mask, mu.variant, mu.params)


def ellipse_params(m2: np.ndarray, sigma: float, mass: float = 0.8):
    """Semi-axes and orientation of the {x: x^T (mu^T mu) x = r^2 sigma^2}
    contour enclosing the given mass of the stretched Gaussian kernel."""
    r2 = -2.0 * math.log(1.0 - mass)
    w, v = np.linalg.eigh(m2)
    axes = sigma * np.sqrt(r2 / w)
    angle = math.atan2(v[1, 0], v[0, 0])
    return float(axes[0]), float(axes[1]), angle


def run_banana2d(spec: ScenarioSpec) -> RunReport:
    t0 = time.perf_counter()
    n2 = 123 if spec.grid_n is None else spec.grid_n
    n1 = max(4, int(round(n2 * 97 / 123))) if spec.grid_n is None else spec.grid_n
    lo = [-24.0, -11.0]
    hi = [24.0, 50.0]
    if spec.grid_lo is not None or spec.grid_hi is not None:
        lo = [spec.grid_lo if spec.grid_lo is not None else v for v in lo]
        hi = [spec.grid_hi if spec.grid_hi is not None else v for v in hi]
    sigma_g = 0.5 if spec.sigma is None else spec.sigma
    grid = make_grid(2, lo, hi, [n1, n2])
    f = banana_density(grid)

    kg = make_grid(2, [-6.0 * sigma_g] * 2, [6.0 * sigma_g] * 2, [121, 121])
    gp = kg.points()
    g = ScalarField(kg, np.exp(-0.5 * (gp ** 2).sum(-1) / sigma_g ** 2) / (2.0 * math.pi * sigma_g ** 2))

    mu_e = mu_wigner(f, floor=1e-7, window_radius=1.0)
    mu_d, fp_report = mu_adaptive_fixed_point(f, lam=spec.lam, max_iter=5, nsigma=4.0)
    mu_conv = clip_mu(mu_e, 0.25, 1.4)
    fthr = np.where(f.values > 1e-12 * f.values.max(), f.values, 0.0)
    fsp = ScalarField(grid, fthr)
    ident = MuField(grid, np.broadcast_to(np.eye(2), grid.shape + (2, 2)).copy(), np.zeros(grid.shape, bool))
    conv_g = adaptive_conv(fsp, g, ident, p=1.0)
    conv_e = adaptive_conv(fsp, g, mu_conv, p=1.0)
    mu_d_conv = clip_mu(mu_d, 0.25, 1.4)
    conv_d = adaptive_conv(fsp, g, mu_d_conv, p=1.0)

    pts = grid.points()
    write_csv(
        os.path.join(spec.out_dir, "banana2d.csv"),
        ["x1", "x2", "f", "conv_g", "conv_mu_d", "conv_mu_e"],
        [pts[..., 0], pts[..., 1], f.values, conv_g.values, conv_d.values, conv_e.values],
    )

    # default centers: the apex plus one point on each arm of the ridge
    # x2 = alpha (x1 / sigma)^2
    centers = spec.extras.get("centers", [(0.0, 0.0), (12.0, 23.04), (-12.0, 23.04)])
    rows = []
    for cx, cy in centers:
        idx = (
            int(np.argmin(np.abs(grid.axis(0) - cx))),
            int(np.argmin(np.abs(grid.axis(1) - cy))),
        )
        m = mu_e.values[idx]
        major, minor, angle = ellipse_params(m.T @ m, sigma_g)
        rows.append((grid.axis(0)[idx[0]], grid.axis(1)[idx[1]], max(major, minor), min(major, minor), angle))
    rows = np.array(rows)
    write_csv(
        os.path.join(spec.out_dir, "banana2d_ellipses.csv"),
        ["center_x1", "center_x2", "axis_major", "axis_minor", "angle_rad"],
        [rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3], rows[:, 4]],
    )

    def axis_ratio(cx, cy):
        idx = (
            int(np.argmin(np.abs(grid.axis(0) - cx))),
            int(np.argmin(np.abs(grid.axis(1) - cy))),
        )
        m = mu_e.values[idx]
        w = np.linalg.eigvalsh(np.linalg.inv(m.T @ m))
        return math.sqrt(w[1] / w[0]), idx

    arm_ratio = max(axis_ratio(12.0, 23.04)[0], axis_ratio(-12.0, 23.04)[0])
    apex_ratio, apex_idx = axis_ratio(0.0, 0.0)
    anisotropy = _deficit(apex_ratio, arm_ratio)
    mass_err = abs(integrate(conv_e) - integrate(fsp)) / integrate(fsp)
    target = 0.5 * np.diag([1.0 / 5.0, 1.0])
    apex_err = float(np.abs(mu_e.values[apex_idx] - target).max() / np.abs(target).max())
    checks = [
        CheckResult("banana-arm-anisotropy", anisotropy, 0.0),
        CheckResult("banana-mass-preservation", float(mass_err), 1e-4),
        CheckResult("banana-apex-calibration", apex_err, 0.25),
    ]
    params = {
        "alpha": 4.0, "sigma_banana": 5.0, "sigma_g": sigma_g, "lambda": spec.lam,
        "mu_e_window_radius": 1.0, "mu_e_floor": 1e-7, "conv_mu_eig_clip": [0.25, 1.4],
        "fixed_point_converged": fp_report.converged,
        "fixed_point_iterations": fp_report.iterations,
        "centers": [list(c) for c in centers],
    }
    return _finish(spec, checks, t0, params)


# ---------------------------------------------------------------------------
# threegauss: locality under drifting components

def run_threegauss(spec: ScenarioSpec) -> RunReport:
    t0 = time.perf_counter()
    res_d, res_e = _three_gauss_locality()
    ts = [2.0, 4.0, 8.0]
    write_csv(
        os.path.join(spec.out_dir, "threegauss.csv"),
        ["t", "mu_d_residual", "mu_e_residual"],
        [np.array(ts), np.array(res_d), np.array(res_e)],
    )
    dec = 0.0
    for a, b in zip(res_d, res_d[1:]):
        if not b < a:
            dec += (b - a) + 1.0
    offset = _deficit(5.0 * res_d[-1], res_e[-1])
    # identical components: mu nearly constant on each bump support
    grid = make_grid(1, [-14.0], [14.0], [897])
    x = grid.axis(0)
    t = ts[-1]
    fv = sum(np.exp(-0.5 * (x - c) ** 2) for c in (-t, 0.0, t))
    mue = mu_wigner(ScalarField(grid, fv), floor=0.0).values[:, 0, 0]
    spread = 0.0
    for c in (-t, 0.0, t):
        on = np.abs(x - c) < 1.0
        spread = max(spread, float(mue[on].std() / mue[on].mean()))
    checks = [
        CheckResult("threegauss-fixed-point-locality", dec, 0.0),
        CheckResult("threegauss-wigner-offset", offset, 0.0),
        CheckResult("threegauss-identical-components", max(0.0, spread - 0.02), 0.0),
    ]
    return _finish(spec, checks, t0, {"t_values": ts, "component_spread": spread})


# ---------------------------------------------------------------------------
# vkde-demo: fixed-point bandwidths on a sampled two-scale mixture

def run_vkde_demo(spec: ScenarioSpec) -> RunReport:
    t0 = time.perf_counter()
    n = 100 if spec.grid_n is None else spec.grid_n
    rng = np.random.default_rng(spec.seed)
    half = n // 2
    pts = np.vstack([
        rng.normal(size=(n - half, 1)),
        4.0 + rng.normal(size=(half, 1)) / 6.0,
    ])
    samples = SampleSet(pts)
    kappa = spec.kappa if spec.kappa is not None else calibrate_kappa(samples, spec.beta)
    history = []
    bw, report = vkde_fixed_point(
        samples, kappa, spec.beta, on_iterate=lambda k, m: history.append(m)
    )
    hist = np.array(history)
    iters = np.repeat(np.arange(1, hist.shape[0] + 1), samples.n)
    sample_idx = np.tile(np.arange(samples.n), hist.shape[0])
    write_csv(
        os.path.join(spec.out_dir, "vkde_demo_iterations.csv"),
        ["iteration", "sample", "m"],
        [iters, sample_idx, hist.reshape(-1)],
    )
    grid = make_grid(1, [-8.0], [8.0], [801])
    dens = vkde_sample_point(samples, bw.m).field(grid)
    write_csv(
        os.path.join(spec.out_dir, "vkde_demo_density.csv"),
        ["x", "density"],
        [grid.axis(0), dens.values],
    )
    checks = [
        CheckResult("vkde-demo-converged", 0.0 if report.converged else 1.0, 0.0),
        CheckResult("vkde-demo-normalization", abs(integrate(dens) - 1.0), 1e-3),
    ]
    params = {
        "N": n, "seed": spec.seed, "kappa": kappa, "beta": spec.beta,
        "iterations": report.iterations, "final_residual": report.final_residual,
        "pinned_warning": report.pinned_warning,
    }
    return _finish(spec, checks, t0, params)


# ---------------------------------------------------------------------------
# phasespace: transforms of a multi-frequency signal

def run_phasespace(spec: ScenarioSpec) -> RunReport:
    t0 = time.perf_counter()
    lo = -12.0 if spec.grid_lo is None else spec.grid_lo
    hi = 12.0 if spec.grid_hi is None else spec.grid_hi
    n = 257 if spec.grid_n is None else spec.grid_n
    grid = make_grid(1, [lo], [hi], [n])
    x = grid.axis(0)
    f = ScalarField(
        grid,
        np.exp(-0.5 * (x + 4.0) ** 2) * np.cos(2.0 * x)
        + np.exp(-0.5 * (x - 4.0) ** 2) * np.cos(5.0 * x),
    )
    w = wigner(f)
    spec_f = fourier(f, xi_grid=w.xi_grid)
    gabor = windowed_fourier(f, spec.q, xi_grid=w.xi_grid)
    write_csv(
        os.path.join(spec.out_dir, "phasespace_spectrum.csv"),
        ["xi", "abs_Ff_squared"],
        [w.xi_grid.axis(0), np.abs(spec_f.values) ** 2],
    )
    xx = np.repeat(x, w.xi_grid.n[0])
    xxi = np.tile(w.xi_grid.axis(0), n)
    write_csv(
        os.path.join(spec.out_dir, "phasespace_fields.csv"),
        ["x", "xi", "abs_FQf_squared", "Wf"],
        [xx, xxi, (np.abs(gabor.values) ** 2).reshape(-1), w.values.reshape(-1)],
    )
    dxi = w.xi_grid.spacing[0]
    m_xi = float(np.abs(w.values.sum(axis=-1) * dxi - f.values ** 2).max())
    m_x = float(np.abs(w.values.sum(axis=0) * grid.spacing[0] - np.abs(spec_f.values) ** 2).max())
    gf = ScalarField(grid, np.exp(-0.5 * x ** 2))
    wg_min = float(wigner(gf).values.min())
    checks = [
        CheckResult("phasespace-wigner-marginals", max(m_xi, m_x), 1e-4),
        CheckResult("phasespace-gaussian-nonnegative", max(0.0, -1e-9 - wg_min), 0.0),
    ]
    return _finish(spec, checks, t0, {"Q": spec.q, "grid_n": n})


# ---------------------------------------------------------------------------
# verify: the full property suite

def run_verify(spec: ScenarioSpec) -> RunReport:
    t0 = time.perf_counter()
    checks = run_checks(spec.check_filter)
    return _finish(spec, checks, t0, {"filter": spec.check_filter, "seed": spec.seed})


_RUNNERS = {
    "smooth1d": run_smooth1d,
    "banana2d": run_banana2d,
    "threegauss": run_threegauss,
    "vkde-demo": run_vkde_demo,
    "phasespace": run_phasespace,
    "verify": run_verify,
}

_FLOAT_KEYS = ("grid_lo", "grid_hi", "sigma", "lambda", "Q", "kappa", "beta")
_INT_KEYS = ("grid_n", "seed")
_STR_KEYS = ("out_dir", "filter")


def read_config(path: str) -> dict:
    """Flat key=value file; blank lines and # comments allowed."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad-config-line {lineno}: missing '='")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if key == "lambda" or key in _FLOAT_KEYS:
                out[key] = float(val)
            elif key in _INT_KEYS:
                out[key] = int(val)
            elif key in _STR_KEYS:
                out[key] = val
            else:
                raise ValueError(f"bad-config-key {lineno}: unknown key '{key}'")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptconv",
        description="Adaptive convolution scenario runner.",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--grid-n", type=int, default=None)
        p.add_argument("--grid-lo", type=float, default=None)
        p.add_argument("--grid-hi", type=float, default=None)
        p.add_argument("--sigma", type=float, default=None, help="kernel width of g")
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="fixed-point window parameter (default 0.9)")
        p.add_argument("--Q", dest="q", type=float, default=None,
                       help="window width of the windowed Fourier transform")
        p.add_argument("--kappa", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", type=str, default=None)
        p.add_argument("--filter", dest="check_filter", type=str, default=None,
                       help="substring filter for verify checks")
        p.add_argument("--config", type=str, default=None,
                       help="flat key=value config file (flags take precedence)")
    return parser


_CONFIG_TO_FIELD = {
    "grid_n": "grid_n", "grid_lo": "grid_lo", "grid_hi": "grid_hi",
    "sigma": "sigma", "lambda": "lam", "Q": "q", "kappa": "kappa",
    "beta": "beta", "seed": "seed", "out_dir": "out_dir", "filter": "check_filter",
}


def build_spec(args: argparse.Namespace) -> ScenarioSpec:
    values = {}
    if args.config is not None:
        cfg = read_config(args.config)
        for key, val in cfg.items():
            values[_CONFIG_TO_FIELD[key]] = val
    for field in _CONFIG_TO_FIELD.values():
        flag = getattr(args, field, None)
        if flag is not None:
            values[field] = flag
    defaults = {"lam": 0.9, "q": 1.0, "beta": 0.5, "seed": 0}
    for key, val in defaults.items():
        values.setdefault(key, val)
    if "out_dir" not in values:
        values["out_dir"] = os.environ.get("ADAPTCONV_OUT_DIR", ".")
    return ScenarioSpec(name=args.scenario, **values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = build_spec(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(spec.out_dir, exist_ok=True)
    report = _RUNNERS[spec.name](spec)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name}: value={c.value:.6g} tol={c.tol:.6g}")
    print(f"{spec.name}: {sum(c.passed for c in report.checks)}/{len(report.checks)} "
          f"checks passed in {report.wall_ms:.0f} ms")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
