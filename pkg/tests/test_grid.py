"""Grids, fields, finite differences, quadrature, SPD helpers."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptconv import (
    ScalarField,
    SpdMatrix,
    gaussian_field,
    gradient,
    hessian,
    integrate,
    lp_norm,
    make_grid,
    spd_sqrt,
)


def test_make_grid_rejects_bad_bounds():
    with pytest.raises(ValueError):
        make_grid(1, [1.0], [0.0], [16])
    with pytest.raises(ValueError):
        make_grid(1, [0.0], [1.0], [3])
    with pytest.raises(ValueError):
        make_grid(2, [0.0], [1.0], [16])


def test_grid_axes_and_spacing():
    g = make_grid(1, [-1.0], [1.0], [5])
    assert np.allclose(g.axis(0), [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert g.cell_volume == pytest.approx(0.5)


def test_scalar_field_rejects_nonfinite():
    g = make_grid(1, [0.0], [1.0], [5])
    with pytest.raises(ValueError):
        ScalarField(g, np.array([0.0, 1.0, np.nan, 0.0, 0.0]))


def test_sample_zero_outside_box():
    g = make_grid(1, [0.0], [1.0], [11])
    f = ScalarField(g, np.ones(11))
    assert f.sample(np.array([[2.0], [-0.5]])) == pytest.approx([0.0, 0.0])


def test_sample_linear_exact():
    g = make_grid(1, [0.0], [1.0], [11])
    f = ScalarField(g, 3.0 * g.axis(0) + 1.0)
    pts = np.array([[0.123], [0.777]])
    assert f.sample(pts) == pytest.approx(3.0 * pts[:, 0] + 1.0, abs=1e-12)


def test_spd_sqrt_diagonal_reference():
    root = spd_sqrt(np.diag([4.0, 9.0]))
    assert np.allclose(root.entries, np.diag([2.0, 3.0]))
    assert not root.repaired


def test_spd_sqrt_rejects_asymmetric():
    with pytest.raises(ValueError):
        spd_sqrt(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_spd_matrix_rejects_indefinite():
    with pytest.raises(ValueError):
        SpdMatrix(np.diag([1.0, -0.5]))


def test_gaussian_field_normalized():
    g = make_grid(2, [-8.0, -8.0], [8.0, 8.0], [129, 129])
    f = gaussian_field(g, [0.3, -0.2], np.diag([1.0, 0.5]))
    assert integrate(f) == pytest.approx(1.0, abs=1e-10)


def test_l2_norm_of_standard_gaussian():
    # ||G[0,1]||_2^2 = 1 / (2 sqrt(pi))
    g = make_grid(1, [-10.0], [10.0], [2001])
    f = gaussian_field(g, [0.0], [[1.0]])
    assert lp_norm(f, 2) ** 2 == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), rel=1e-10)


def test_lp_norm_inf_is_max():
    g = make_grid(1, [0.0], [1.0], [5])
    f = ScalarField(g, np.array([0.0, -3.0, 1.0, 2.0, 0.0]))
    assert lp_norm(f, math.inf) == 3.0


def test_gradient_exact_on_quadratic():
    g = make_grid(1, [-1.0], [1.0], [21])
    x = g.axis(0)
    f = ScalarField(g, x ** 2)
    assert gradient(f).values[:, 0] == pytest.approx(2.0 * x, abs=1e-12)
    assert hessian(f).values[:, 0, 0] == pytest.approx(2.0, abs=1e-10)


def test_hessian_symmetric_2d():
    g = make_grid(2, [-1.0, -1.0], [1.0, 1.0], [17, 17])
    pts = g.points()
    f = ScalarField(g, np.sin(pts[..., 0]) * np.cos(2.0 * pts[..., 1]))
    h = hessian(f, order=4).values
    assert np.allclose(h, np.swapaxes(h, -1, -2))


@settings(deadline=None, max_examples=25)
@given(st.floats(-5.0, 5.0), st.integers(0, 1000))
def test_integrate_is_linear(scale, seed):
    g = make_grid(1, [-2.0], [2.0], [33])
    vals = np.random.default_rng(seed).normal(size=33)
    base = integrate(ScalarField(g, vals))
    scaled = integrate(ScalarField(g, scale * vals))
    assert scaled == pytest.approx(scale * base, abs=1e-12 * (1.0 + abs(scale)))


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 1000), st.integers(1, 4))
def test_spd_sqrt_squares_back(seed, d):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d))
    m = a @ a.T + 0.1 * np.eye(d)
    root = spd_sqrt(m).entries
    assert np.allclose(root @ root, m, atol=1e-10 * np.abs(m).max())
