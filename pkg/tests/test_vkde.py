"""Variable kernel density estimation."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptconv import (
    BandwidthVector,
    SampleSet,
    calibrate_kappa,
    integrate,
    kde_fixed,
    make_grid,
    silverman_bandwidth,
    vkde_fixed_point,
    vkde_sample_point,
)


def test_silverman_reference():
    assert silverman_bandwidth(1, 100) == pytest.approx((4.0 / 300.0) ** 0.2, abs=1e-15)
    with pytest.raises(ValueError):
        silverman_bandwidth(0, 100)


def test_sample_set_validation():
    with pytest.raises(ValueError):
        SampleSet(np.array([[1.0]]))
    with pytest.raises(ValueError):
        SampleSet(np.array([[0.0], [np.inf]]))


def test_bandwidth_vector_validation():
    with pytest.raises(ValueError):
        BandwidthVector(np.array([1.0, -1.0]), 0.1, 10.0)
    with pytest.raises(ValueError):
        BandwidthVector(np.array([1.0, 100.0]), 0.1, 10.0)


def test_kde_fixed_is_bitwise_special_case():
    rng = np.random.default_rng(0)
    ss = SampleSet(rng.normal(size=(30, 1)))
    pts = np.linspace(-3, 3, 41)[:, None]
    a = kde_fixed(ss, h=0.8).at(pts)
    b = vkde_sample_point(ss, np.full(30, 1.0 / 0.8)).at(pts)
    assert np.array_equal(a, b)


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 10 ** 6))
def test_density_normalized_for_arbitrary_bandwidths(seed):
    rng = np.random.default_rng(seed)
    ss = SampleSet(rng.normal(size=(25, 1)))
    m = rng.uniform(0.4, 4.0, 25)
    grid = make_grid(1, [-15.0], [15.0], [3001])
    dens = vkde_sample_point(ss, m).field(grid)
    assert integrate(dens) == pytest.approx(1.0, abs=1e-6)


@settings(deadline=None, max_examples=20)
@given(st.floats(0.5, 2.0), st.integers(0, 10 ** 6))
def test_scaling_identity(alpha, seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(20, 1))
    m = rng.uniform(0.5, 3.0, 20)
    xs = np.linspace(-2.0, 2.0, 31)[:, None]
    a = vkde_sample_point(SampleSet(pts / alpha), m * alpha).at(xs)
    b = alpha * vkde_sample_point(SampleSet(pts), m).at(alpha * xs)
    assert np.abs(a - b).max() < 1e-10 * max(1.0, np.abs(b).max())


def test_calibrate_kappa_fixes_pilot_at_median():
    rng = np.random.default_rng(3)
    ss = SampleSet(rng.normal(size=(60, 1)))
    beta = 0.5
    kappa = calibrate_kappa(ss, beta)
    m0 = 1.0 / silverman_bandwidth(1, 60)
    dens = vkde_sample_point(ss, np.full(60, m0)).at(ss.points)
    assert kappa * np.median(dens ** beta) == pytest.approx(m0, rel=1e-12)


def test_fixed_point_rejects_bad_parameters():
    ss = SampleSet(np.random.default_rng(0).normal(size=(20, 1)))
    with pytest.raises(ValueError):
        vkde_fixed_point(ss, -1.0, 0.5)
    with pytest.raises(ValueError):
        vkde_fixed_point(ss, 1.0, 0.0)


def test_fixed_point_single_cluster_converges():
    ss = SampleSet(np.random.default_rng(7).normal(size=(50, 1)))
    bw, report = vkde_fixed_point(ss, calibrate_kappa(ss, 0.5), 0.5)
    assert report.converged
    assert not report.pinned_warning
    assert report.final_residual <= 1e-6


def test_pinned_warning_on_tight_clip():
    # narrow cluster pins at the upper clip bound while the wide cluster
    # keeps iterating, so the pin persists across iterations
    rng = np.random.default_rng(1)
    pts = np.vstack([rng.normal(size=(20, 1)), 5.0 + rng.normal(size=(20, 1)) / 50.0])
    ss = SampleSet(pts)
    m0 = 1.0 / silverman_bandwidth(1, 40)
    bw, report = vkde_fixed_point(
        ss, calibrate_kappa(ss, 1.0), 1.0, clip=(0.1 * m0, 1.2 * m0),
        tol=1e-15, max_iter=12,
    )
    assert report.pinned_warning
    assert np.all(bw.m <= 1.2 * m0)
