import numpy as np
import pytest

from lpsantalo.bodies import SupportBody, ball, polar_volume, random_ellipsoid, random_polygon, random_smooth_body
from lpsantalo.catalog import indicator
from lpsantalo.oracle import McEstimate, grid_minimize_polar, mc_integral, mc_polar_volume
from lpsantalo.santalo import santalo_point


def test_disc_area_within_three_sigma():
    est = mc_integral(indicator(ball(2)), samples=10**6, seed=1)
    assert est.agrees(np.pi) and est.stderr > 0


def test_disc_second_moment_within_three_sigma():
    est = mc_integral(indicator(ball(2)), lambda x: x[:, 0] ** 2, samples=10**6, seed=2)
    assert est.agrees(np.pi / 4)


def test_fixed_seed_is_reproducible():
    f = indicator(ball(2))
    a = mc_integral(f, samples=50_000, seed=7)
    b = mc_integral(f, samples=50_000, seed=7)
    assert a == b


def test_sample_floor():
    with pytest.raises(ValueError):
        mc_integral(indicator(ball(2)), samples=999)


def test_vector_kernel():
    est = mc_integral(indicator(ball(2, 1.0, np.array([0.5, 0.0]))), lambda x: x, samples=200_000, seed=3)
    assert np.shape(est.value) == (2,)
    assert est.agrees([0.5 * np.pi, 0.0])


def test_polar_volume_of_unit_ball():
    est = mc_polar_volume(ball(2).support, 2, samples=10**6, seed=4)
    assert est.agrees(np.pi)


def test_polar_volume_of_radius_two_ball():
    est = mc_polar_volume(ball(2, 2.0).support, 2, samples=10**6, seed=5)
    assert est.agrees(np.pi / 4)


def test_polar_volume_of_random_ellipsoid():
    K = random_ellipsoid(np.random.default_rng(6), 2)
    est = mc_polar_volume(K.support, 2, samples=10**6, seed=6)
    assert est.agrees(polar_volume(SupportBody(2, K.support)))


def test_polar_volume_rejects_nonpositive_support():
    with pytest.raises(ValueError):
        mc_polar_volume(ball(2, 1.0, np.array([3.0, 0.0])).support, 2, samples=1000)


def test_agreement_helper():
    est = McEstimate(1.0, 0.1, 1000, 0)
    assert est.agrees(1.29) and not est.agrees(1.31)


def test_grid_minimizer_symmetric_body():
    K = random_polygon(np.random.default_rng(7), 10, symmetric=True)
    step = 0.02
    assert np.all(np.abs(grid_minimize_polar(K, step)) <= step)


def test_grid_minimizer_shifted_ball():
    v = np.array([0.31, -0.17])
    step = 0.01
    assert np.all(np.abs(grid_minimize_polar(ball(2, 1.0, v), step) - v) <= step)


def test_grid_minimizer_matches_solver_on_smooth_body():
    K = random_smooth_body(np.random.default_rng(8))
    step = 0.01
    assert np.all(np.abs(grid_minimize_polar(K, step) - santalo_point(K).point) <= step)
