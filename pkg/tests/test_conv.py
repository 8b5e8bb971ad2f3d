"""Adaptive convolutions, type-two/three kernels, continuity current."""
import math

import numpy as np
import pytest

from adaptconv import (
    ContinuityInput,
    KernelField,
    MatrixField,
    ScalarField,
    VectorField,
    adaptive_conv,
    constant_mu_field,
    continuity_residual,
    gaussian_field,
    generalized_conv,
    integrate,
    lp_norm,
    make_grid,
    type_three_conv,
    type_two_conv,
)
from adaptconv.conv import adaptive_conv_derivative
from adaptconv.mu import MuField


def _setup_1d(n=257, half=8.0, sg=0.6):
    grid = make_grid(1, [-half], [half], [n])
    f = gaussian_field(grid, [0.3], [[1.0]])
    kg = make_grid(1, [-8.0 * sg], [8.0 * sg], [4097])
    g = gaussian_field(kg, [0.0], [[sg ** 2]])
    return grid, f, g, sg


def test_identity_mu_is_ordinary_convolution():
    # Gaussian * Gaussian has a closed form
    grid, f, g, sg = _setup_1d()
    mu = constant_mu_field(grid, 1.0)
    out = adaptive_conv(f, g, mu, p=1.0)
    ref = gaussian_field(grid, [0.3], [[1.0 + sg ** 2]])
    assert np.abs(out.values - ref.values).max() < 1e-6


def test_direct_and_fft_paths_agree():
    grid, f, g, _ = _setup_1d(n=129)
    mu = constant_mu_field(grid, 1.4)
    a = adaptive_conv(f, g, mu, p=1.0, method="fft")
    b = adaptive_conv(f, g, mu, p=1.0, method="direct")
    assert np.abs(a.values - b.values).max() < 1e-10


def test_fft_path_rejects_varying_mu():
    grid, f, g, _ = _setup_1d(n=65)
    vals = (1.0 + 0.1 * np.tanh(grid.axis(0)))[:, None, None]
    mu = MuField(grid, vals, np.zeros(grid.shape, bool))
    with pytest.raises(ValueError):
        adaptive_conv(f, g, mu, method="fft")


def test_linearity_in_f():
    grid, f, g, _ = _setup_1d(n=129)
    vals = (1.0 + 0.3 * np.tanh(grid.axis(0)))[:, None, None]
    mu = MuField(grid, vals, np.zeros(grid.shape, bool))
    f2 = ScalarField(grid, np.exp(-0.5 * (grid.axis(0) - 1.0) ** 2))
    lhs = adaptive_conv(ScalarField(grid, 2.0 * f.values + f2.values), g, mu).values
    rhs = 2.0 * adaptive_conv(f, g, mu).values + adaptive_conv(f2, g, mu).values
    assert np.abs(lhs - rhs).max() < 1e-12


def test_mass_preservation_quick():
    grid, f, g, _ = _setup_1d(n=257, half=10.0)
    vals = (1.0 + 0.3 * np.tanh(grid.axis(0)))[:, None, None]
    mu = MuField(grid, vals, np.zeros(grid.shape, bool))
    out = adaptive_conv(f, g, mu, p=1.0)
    assert lp_norm(out, 1) == pytest.approx(lp_norm(f, 1), abs=1e-6)


def test_invalid_p_rejected():
    grid, f, g, _ = _setup_1d(n=65)
    mu = constant_mu_field(grid, 1.0)
    with pytest.raises(ValueError):
        adaptive_conv(f, g, mu, p=0.5)


def test_p_inf_drops_determinant_weight():
    grid, f, g, _ = _setup_1d(n=129)
    mu = constant_mu_field(grid, 2.0)
    a = adaptive_conv(f, g, mu, p=math.inf).values
    b = adaptive_conv(f, g, mu, p=1.0).values
    assert np.abs(2.0 * a - b).max() < 1e-12


def test_generalized_conv_matches_matrix_product():
    grid = make_grid(1, [-2.0], [2.0], [33])
    f = ScalarField(grid, np.exp(-grid.axis(0) ** 2))
    x = grid.axis(0)
    mat = np.exp(-((x[:, None] - x[None, :]) ** 2))
    out = generalized_conv(f, KernelField(grid, mat))
    assert np.allclose(out.values, mat @ f.values * grid.cell_volume)


def test_derivative_rule_constant_mu_analytic():
    grid, f, g, sg = _setup_1d(n=257)
    kg = g.grid
    xg = kg.axis(0)
    g_grad = VectorField(kg, (-xg / sg ** 2 * g.values)[:, None])
    mu = constant_mu_field(grid, 1.0)
    got = adaptive_conv_derivative(f, g, mu, 1.0, (1,), g_grad=g_grad).values
    x = grid.axis(0)
    s2 = 1.0 + sg ** 2
    ref = -(x - 0.3) / s2 * gaussian_field(grid, [0.3], [[s2]]).values
    assert np.abs(got - ref).max() < 1e-6


def test_derivative_rule_rejects_high_order():
    grid, f, g, _ = _setup_1d(n=65)
    mu = constant_mu_field(grid, 1.0)
    with pytest.raises(ValueError):
        adaptive_conv_derivative(f, g, mu, 1.0, (3,))


def test_type_two_young_bound():
    grid = make_grid(1, [-5.0], [5.0], [201])
    f = ScalarField(grid, np.exp(-0.5 * grid.axis(0) ** 2))
    g = lambda u: np.exp(-0.5 * (u / 0.7) ** 2)
    out = type_two_conv(f, g, lambda u: u + 0.3 * np.sin(u), 2.0)
    z = np.linspace(-20, 20, 10001)
    gnorm = np.trapezoid(g(z) ** 2, z) ** 0.5
    assert lp_norm(out, 2) <= lp_norm(f, 1) * gnorm * (1.0 + 1e-6)


def test_type_three_requires_1d_and_small_grid():
    g2 = make_grid(2, [-2.0, -2.0], [2.0, 2.0], [17, 17])
    f2 = gaussian_field(g2, [0.0, 0.0], np.eye(2))
    gfun = lambda u: np.exp(-0.5 * u ** 2)
    with pytest.raises(ValueError):
        type_three_conv(f2, gfun, gfun, lambda u: u, 1.0)
    g1 = make_grid(1, [-2.0], [2.0], [601])
    f1 = gaussian_field(g1, [0.0], [[0.25]])
    with pytest.raises(ValueError):
        type_three_conv(f1, gfun, gfun, lambda u: u, 1.0)


def test_continuity_static_case_zero_residual():
    grid = make_grid(1, [-8.0], [8.0], [129])
    rho = gaussian_field(grid, [0.0], [[1.0]])
    kg = make_grid(1, [-5.0], [5.0], [2049])
    g = gaussian_field(kg, [0.0], [[0.49]])
    inp = ContinuityInput(
        rho,
        VectorField(grid, np.zeros(grid.shape + (1,))),
        constant_mu_field(grid, 1.0),
        MatrixField(grid, np.zeros(grid.shape + (1, 1))),
        g,
    )
    assert continuity_residual(inp, inp, inp, 0.1) < 1e-12


def test_conv_preserves_total_mass_2d():
    grid = make_grid(2, [-6.0, -6.0], [6.0, 6.0], [49, 49])
    f = gaussian_field(grid, [0.0, 0.0], np.eye(2))
    kg = make_grid(2, [-3.0, -3.0], [3.0, 3.0], [241, 241])
    g = gaussian_field(kg, [0.0, 0.0], 0.25 * np.eye(2))
    mu = constant_mu_field(grid, np.diag([1.0, 1.5]))
    out = adaptive_conv(f, g, mu, p=1.0)
    # tolerance set by the bilinear lookup of g along the stretched axis
    assert integrate(out) == pytest.approx(integrate(f), abs=2e-3)
