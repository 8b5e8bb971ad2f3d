"""Fourier, windowed Fourier, and Wigner transforms."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptconv import (
    ScalarField,
    adaptive_windowed_fourier,
    conjugate_grid,
    fourier,
    husimi_check,
    inverse_fourier,
    make_grid,
    wigner,
    windowed_fourier,
)
from adaptconv.grid import MatrixField


def _grid(n=256, half=10.0):
    return make_grid(1, [-half], [half], [n])


def test_fourier_of_gaussian():
    # F(exp(-x^2/2))(xi) = exp(-xi^2/2) with the unitary convention
    g = _grid()
    f = ScalarField(g, np.exp(-0.5 * g.axis(0) ** 2))
    s = fourier(f)
    xi = s.freq_grid.axis(0)
    assert np.abs(s.values - np.exp(-0.5 * xi ** 2)).max() < 1e-10


def test_inversion_roundtrip():
    g = _grid()
    x = g.axis(0)
    f = ScalarField(g, np.exp(-0.5 * x ** 2) * np.cos(3.0 * x))
    back = inverse_fourier(fourier(f), g)
    assert np.abs(back.real - f.values).max() < 1e-12
    assert np.abs(back.imag).max() < 1e-12


def test_inversion_rejects_wrong_grid():
    g = _grid()
    f = ScalarField(g, np.exp(-0.5 * g.axis(0) ** 2))
    s = fourier(f)
    other = make_grid(1, [-5.0], [5.0], [256])
    with pytest.raises(ValueError):
        inverse_fourier(s, other)


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 10 ** 6))
def test_plancherel_random_mixture(seed):
    g = _grid()
    x = g.axis(0)
    rng = np.random.default_rng(seed)
    vals = np.zeros_like(x)
    for _ in range(3):
        vals += rng.uniform(-1, 1) * np.exp(-0.5 * ((x - rng.uniform(-2, 2)) / rng.uniform(0.5, 1.5)) ** 2)
    f = ScalarField(g, vals)
    s = fourier(f)
    l2x = np.sum(f.values ** 2) * g.cell_volume
    l2xi = np.sum(np.abs(s.values) ** 2) * s.freq_grid.cell_volume
    assert l2xi == pytest.approx(l2x, rel=1e-12, abs=1e-13)


def test_wigner_of_gaussian():
    # W(exp(-x^2/2))(x, xi) = (1/sqrt(pi)) exp(-x^2 - xi^2) in the
    # convention with marginal |f|^2
    g = make_grid(1, [-8.0], [8.0], [129])
    x = g.axis(0)
    w = wigner(ScalarField(g, np.exp(-0.5 * x ** 2)))
    xi = w.xi_grid.axis(0)
    ref = np.exp(-(x[:, None] ** 2 + xi[None, :] ** 2)) / math.sqrt(math.pi)
    assert np.abs(w.values - ref).max() < 1e-8


def test_wigner_marginals():
    g = make_grid(1, [-12.0], [12.0], [257])
    x = g.axis(0)
    f = ScalarField(g, np.exp(-0.5 * (x + 3.0) ** 2) * np.cos(2.0 * x) + np.exp(-0.5 * (x - 3.0) ** 2))
    w = wigner(f)
    xi_marg = w.values.sum(axis=-1) * w.xi_grid.spacing[0]
    assert np.abs(xi_marg - f.values ** 2).max() < 1e-12
    spec = fourier(f, xi_grid=w.xi_grid)
    x_marg = w.values.sum(axis=0) * g.spacing[0]
    assert np.abs(x_marg - np.abs(spec.values) ** 2).max() < 1e-12


def test_husimi_identity_gaussian():
    g = make_grid(1, [-9.0], [9.0], [129])
    f = ScalarField(g, np.exp(-0.5 * g.axis(0) ** 2))
    assert husimi_check(f) < 1e-8


def test_windowed_fourier_constant_reduction():
    g = make_grid(1, [-6.0], [6.0], [65])
    x = g.axis(0)
    f = ScalarField(g, np.exp(-0.5 * x ** 2) * (1.0 + 0.2 * np.sin(3.0 * x)))
    q_field = MatrixField(g, np.full(g.shape + (1, 1), 1.3 ** 2) ** 0.5)
    a = windowed_fourier(f, 1.3)
    b = adaptive_windowed_fourier(f, q_field)
    assert np.array_equal(a.values, b.values)


def test_windowed_fourier_rejects_bad_window():
    g = make_grid(1, [-6.0], [6.0], [65])
    f = ScalarField(g, np.exp(-0.5 * g.axis(0) ** 2))
    with pytest.raises(ValueError):
        windowed_fourier(f, -1.0)


def test_conjugate_grid_is_self_dual_in_size():
    g = make_grid(1, [-4.0], [4.0], [64])
    c = conjugate_grid(g)
    assert c.n == g.n
    assert c.spacing[0] == pytest.approx(2.0 * math.pi / (64 * g.spacing[0]))
