"""Adaptation fields: variants, repair, fixed point."""
import math

import numpy as np
import pytest

from adaptconv import (
    ScalarField,
    constant_mu_field,
    gaussian_field,
    make_grid,
    mu_adaptive_fixed_point,
    mu_global_fourier,
    mu_gradient_baseline,
    mu_windowed,
    mu_wigner,
    pd_repair,
)


def test_pd_repair_reference():
    out = pd_repair(np.diag([1.0, -0.5]), 1e-12)
    assert np.allclose(out.entries, np.diag([1.0, 0.5]))
    assert out.repaired


def test_pd_repair_leaves_spd_alone():
    out = pd_repair(np.diag([2.0, 3.0]), 1e-12)
    assert np.allclose(out.entries, np.diag([2.0, 3.0]))
    assert not out.repaired


def test_constant_mu_field_broadcast():
    g = make_grid(2, [-1.0, -1.0], [1.0, 1.0], [5, 5])
    mu = constant_mu_field(g, 2.0)
    assert mu.values.shape == (5, 5, 2, 2)
    assert np.allclose(mu.values, 2.0 * np.eye(2))
    assert not mu.repaired_mask.any()


def test_gradient_baseline_rejects_bad_regularizers():
    g = make_grid(1, [-4.0], [4.0], [65])
    f = gaussian_field(g, [0.0], [[1.0]])
    with pytest.raises(ValueError):
        mu_gradient_baseline(f, 0.0, 1e-12)


def test_global_fourier_gaussian():
    # constant variant on G[0, sigma^2] equals (1/sqrt(2)) / sigma
    g = make_grid(1, [-12.0], [12.0], [513])
    f = gaussian_field(g, [0.0], [[2.25]])
    got = mu_global_fourier(f).entries[0, 0]
    assert got == pytest.approx(1.0 / (math.sqrt(2.0) * 1.5), rel=1e-6)


def test_wigner_variant_gaussian():
    g = make_grid(1, [-8.0], [8.0], [257])
    f = gaussian_field(g, [0.0], [[1.0]])
    mu = mu_wigner(f, floor=0.0)
    mask = f.values > 1e-6 * f.values.max()
    assert np.abs(mu.values[mask, 0, 0] - 0.5).max() < 0.01


def test_windowed_variant_gaussian_lower_bound():
    # window covariance adds Q^{-2}/2, so mu^(c) >= 1/(sqrt(2) Q) everywhere
    g = make_grid(1, [-8.0], [8.0], [257])
    f = gaussian_field(g, [0.0], [[1.0]])
    q = 1.5
    mu = mu_windowed(f, q)
    assert mu.values[..., 0, 0].min() >= 1.0 / (math.sqrt(2.0) * q) - 1e-12


def test_fixed_point_gaussian_budget_and_value():
    g = make_grid(1, [-8.0], [8.0], [257])
    f = gaussian_field(g, [0.0], [[1.0]])
    lam = 0.9
    mu, report = mu_adaptive_fixed_point(f, lam=lam, tol=1e-6, max_iter=40)
    assert report.converged and report.iterations <= 30
    target = 1.0 / math.sqrt(2.0 - lam ** 2)
    mask = f.values > 1e-6 * f.values.max()
    assert np.abs(mu.values[mask, 0, 0] - target).max() / target < 0.02


def test_fixed_point_small_lambda_approaches_global_variant():
    g = make_grid(1, [-10.0], [10.0], [257])
    f = gaussian_field(g, [0.0], [[1.0]])
    mu, report = mu_adaptive_fixed_point(f, lam=0.2, max_iter=60)
    assert report.converged
    center = mu.values[128, 0, 0]
    glob = mu_global_fourier(f).entries[0, 0]
    assert center == pytest.approx(glob, rel=0.02)


def test_fixed_point_rejects_bad_lambda():
    g = make_grid(1, [-4.0], [4.0], [65])
    f = gaussian_field(g, [0.0], [[1.0]])
    for lam in (0.0, -0.1, math.sqrt(2.0)):
        with pytest.raises(ValueError):
            mu_adaptive_fixed_point(f, lam=lam)


def test_scalar_invariance_bitwise_power_of_two():
    # ratio-based variants are bit-for-bit invariant under power-of-two
    # amplitude scalings
    g = make_grid(1, [-8.0], [8.0], [257])
    x = g.axis(0)
    vals = np.exp(-0.5 * x ** 2) * (1.0 + 0.2 * np.sin(3.0 * x))
    a = mu_windowed(ScalarField(g, vals), 1.0)
    b = mu_windowed(ScalarField(g, 4.0 * vals), 1.0)
    assert np.array_equal(a.values, b.values)


def test_shift_invariance_quick():
    g = make_grid(1, [-10.0], [10.0], [321])
    x = g.axis(0)
    fv = lambda t: np.exp(-0.5 * t ** 2)
    shift = 32  # 2.0 in grid units
    a = mu_wigner(ScalarField(g, fv(x)), floor=0.0).values
    b = mu_wigner(ScalarField(g, fv(x - shift * g.spacing[0])), floor=0.0).values
    mask = np.abs(x[: -shift]) < 3.0
    assert np.abs(b[shift:] - a[:-shift])[mask].max() < 1e-8
