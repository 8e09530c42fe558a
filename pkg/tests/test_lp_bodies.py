import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpsantalo.bodies import (
    Ellipsoid, ball, random_ellipsoid, random_polygon, random_smooth_body, random_star_body, subadditivity_defect,
    volume,
)
from lpsantalo.catalog import ball_profile, indicator, perturbed, tilted, profile
from lpsantalo.inequalities import constant_r
from lpsantalo.lp_bodies import (
    AsymParams, asym_bracket, centroid_body, centroid_support, constant_c, moment_body_K, moment_support_f, omega,
    polar_moment_volume,
)
from lpsantalo.oracle import mc_integral
from lpsantalo.quadrature import sphere_grid

G2 = sphere_grid(2, 1024)
E1 = np.array([1.0, 0.0])


def _unit(m, seed, n=2):
    u = np.random.default_rng(seed).standard_normal((m, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


# --- constants and brackets -------------------------------------------------


def test_ball_volume_constant():
    assert omega(2) == pytest.approx(np.pi)
    assert omega(3) == pytest.approx(4 * np.pi / 3)


def test_centroid_normalization_constant():
    assert constant_c(2, 2) == pytest.approx(0.25, rel=1e-14)


def test_asym_params_validation():
    with pytest.raises(ValueError):
        AsymParams(0.5, 0.0)
    with pytest.raises(ValueError):
        AsymParams(2.0, 1.5)


def test_bracket_symmetric_is_half_abs_power():
    y, z = np.array([1.0, 2.0]), np.array([-3.0, 0.5])
    assert asym_bracket(y, z, AsymParams(3.0, 0.5)) == pytest.approx(0.5 * abs(y @ z) ** 3)


def test_bracket_drops_negative_part():
    assert asym_bracket(np.array([1.0, 0.0]), np.array([-3.0, 0.0]), AsymParams(2.0, 0.0)) == 0.0


def test_bracket_weighting():
    assert asym_bracket(np.array([1.0, 0.0]), np.array([2.0, 0.0]), AsymParams(3.0, 0.25)) == pytest.approx(6.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1, 6), st.floats(0, 1), st.floats(-3, 3), st.floats(-3, 3))
def test_bracket_reflection(p, eps, a, b):
    y, z = np.array([1.0, 0.0]), np.array([a, b])
    lhs = asym_bracket(y, z, AsymParams(p, eps))
    rhs = asym_bracket(-y, z, AsymParams(p, 1 - eps))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


# --- moment bodies of densities ---------------------------------------------


def test_disc_moment_support():
    h = moment_support_f(indicator(ball(2)), AsymParams(2.0, 0.5), E1)
    assert abs(h - np.sqrt(np.pi / 8)) < 1e-6


def test_moment_support_amplitude_scaling():
    f = ball_profile(2, 2.0, 2.0, np.array([[1.0, 0.3], [0.2, 1.4]]))
    prm = AsymParams(2.0, 0.2)
    y = _unit(5, 1)
    assert np.allclose(moment_support_f(f.scale(3.0), prm, y), 3.0 ** 0.5 * moment_support_f(f, prm, y), rtol=1e-12)


def test_moment_support_vanishes_away_from_support():
    f = indicator(ball(2, 0.5, np.array([1.6, 0.0])))
    assert moment_support_f(f, AsymParams(2.0, 0.0), -E1) == 0.0


def test_moment_support_against_monte_carlo():
    f = tilted(profile(random_polygon(np.random.default_rng(4)), 2.0, 2.0), np.array([0.5, -0.3]))
    prm = AsymParams(2.0, 0.25)
    y = np.array([0.6, -0.8])
    est = mc_integral(f, lambda x: asym_bracket(y, x, prm), samples=400_000, seed=3)
    assert est.agrees(moment_support_f(f, prm, y) ** 2)


def test_polar_moment_volume_of_disc():
    assert abs(polar_moment_volume(indicator(ball(2)), AsymParams(2.0, 0.5)) - 8.0) < 1e-4


def test_polar_moment_volume_amplitude():
    f = ball_profile(2, 3.0, 2.0)
    prm = AsymParams(2.0, 0.5)
    assert polar_moment_volume(f.scale(4.0), prm) == pytest.approx(4.0 ** (-2 / 2) * polar_moment_volume(f, prm),
                                                                 rel=1e-10)


def test_polar_moment_volume_rotation_invariant():
    f = ball_profile(2, 2.0, 2.0, np.diag([1.0, 2.0]))
    t = 0.7
    R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    prm = AsymParams(2.0, 0.0)
    assert abs(polar_moment_volume(f.linear_image(R), prm) - polar_moment_volume(f, prm)) <= 1e-6


def test_polar_moment_volume_infinite_marker():
    f = indicator(ball(2, 0.5, np.array([1.6, 0.0])))
    assert polar_moment_volume(f, AsymParams(2.0, 0.0)) == np.inf


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_even_density_is_eps_independent(seed, eps):
    B = np.random.default_rng(seed).normal(size=(2, 2)) + 2 * np.eye(2)
    f = perturbed(ball_profile(2, 2.0, 2.0, B), 0.3, np.zeros(2), phase=np.pi / 2)  # even: cos(0)=const
    y = _unit(6, seed)
    h_eps = moment_support_f(f, AsymParams(2.0, eps), y)
    h_sym = moment_support_f(f, AsymParams(2.0, 0.5), y)
    assert np.allclose(h_eps, h_sym, rtol=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_flipped_eps_reflects_body(seed):
    f = tilted(profile(random_polygon(np.random.default_rng(seed)), 2.0, 2.0), np.array([0.4, 0.1]))
    y = _unit(6, seed)
    h1 = moment_support_f(f, AsymParams(2.0, 1.0), y)
    h0 = moment_support_f(f, AsymParams(2.0, 0.0), -y)
    assert np.array_equal(h1, h0) or np.allclose(h1, h0, rtol=1e-14)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_moment_body_is_convex(seed, eps):
    rng = np.random.default_rng(seed)
    M = moment_body_K(random_star_body(rng, 2), AsymParams(2.0, eps))
    assert subadditivity_defect(M, rng) <= 1e-9


# --- moment and centroid bodies of sets -------------------------------------


@pytest.mark.parametrize("eps", [0.0, 0.3, 0.5, 1.0])
def test_moment_body_of_disc_is_ball(eps):
    M = moment_body_K(ball(2), AsymParams(2.0, eps))
    assert np.allclose(M.support(G2.nodes[::17]), np.sqrt(np.pi / 8), atol=1e-10)


def test_radial_and_density_formulas_agree():
    rng = np.random.default_rng(17)
    for _ in range(3):
        K = random_smooth_body(rng)
        prm = AsymParams(2.0, float(rng.uniform(0, 1)))
        y = _unit(8, 2)
        h_rad = moment_body_K(K, prm).support(y)
        h_def = moment_support_f(indicator(K), prm, y)
        assert np.max(np.abs(h_rad - h_def)) <= 1e-5


def test_moment_body_dilation():
    K = random_star_body(np.random.default_rng(1), 2)
    prm = AsymParams(3.0, 0.2)
    y = _unit(5, 3)
    lam = 1.7
    assert np.allclose(moment_body_K(K.scale(lam), prm).support(y),
                       lam ** (5 / 3) * moment_body_K(K, prm).support(y), rtol=1e-8)


def test_centroid_body_of_disc_is_disc():
    assert centroid_support(ball(2), 2.0, E1) == pytest.approx(1.0, abs=1e-6)


def test_centroid_body_commutes_with_dilation():
    assert centroid_support(ball(2, 2.0), 2.0, E1) == pytest.approx(2.0, abs=1e-6)


def test_busemann_petty_on_random_star_bodies():
    rng = np.random.default_rng(29)
    g = sphere_grid(2, 256)  # smooth radial functions: a coarse grid is spectrally accurate
    for _ in range(50):
        K = random_star_body(rng, 2)
        assert volume(centroid_body(K, 2.0, g), g) >= volume(K, g) * (1 - 1e-4)


def test_busemann_petty_equality_for_ellipsoids():
    for seed in range(3):
        K = random_ellipsoid(np.random.default_rng(seed), 2)
        assert volume(centroid_body(K, 2.0)) == pytest.approx(volume(K), rel=1e-4)


def test_moment_body_volume_lower_bound():
    rng = np.random.default_rng(31)
    r = constant_r(2, 2.0)
    g = sphere_grid(2, 256)  # moment bodies are smooth
    for i in range(10):
        K = random_polygon(rng) if i % 2 else random_smooth_body(rng)
        prm = AsymParams(2.0, float(rng.uniform(0, 1)))
        lhs = volume(K) ** (-2) * volume(moment_body_K(K, prm), g)
        assert lhs >= r * (1 - 1e-4)


def test_moment_volume_constant_at_ellipsoid():
    E = Ellipsoid(np.array([[1.3, 0.2], [0.0, 0.6]]))
    lhs = volume(E) ** (-2) * volume(moment_body_K(E, AsymParams(2.0, 0.5)))
    assert lhs == pytest.approx(constant_r(2, 2.0), rel=1e-4)
