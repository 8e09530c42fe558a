import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpsantalo.bodies import ball, Ellipsoid
from lpsantalo.catalog import indicator, ball_profile
from lpsantalo.oracle import mc_integral
from lpsantalo.quadrature import (
    IntegrationError, QuadratureSettings, integrate_density, integrate_sphere, lp_integral, sphere_grid,
)

E1 = np.array([1.0, 0.0])


# --- sphere grids -----------------------------------------------------------


def test_circle_weights_sum_to_circumference():
    assert abs(sphere_grid(2, 512).weights.sum() - 2 * np.pi) < 1e-12


def test_sphere_weights_sum_to_area():
    assert abs(sphere_grid(3, 64).weights.sum() - 4 * np.pi) < 1e-10


def test_positive_part_squared_on_circle():
    g = sphere_grid(2, 1024)
    val = integrate_sphere(g, lambda u: np.maximum(u[:, 0], 0.0) ** 2)
    assert abs(val - np.pi / 2) < 1e-8


def test_constant_on_circle():
    assert abs(integrate_sphere(sphere_grid(2, 256), lambda u: np.ones(len(u))) - 2 * np.pi) < 1e-12


def test_coordinate_square_on_sphere():
    val = integrate_sphere(sphere_grid(3, 48), lambda u: u[:, 0] ** 2)
    assert abs(val - 4 * np.pi / 3) < 1e-10


def test_abs_cos_on_circle():
    val = integrate_sphere(sphere_grid(2, 4096), lambda u: np.abs(u[:, 0]))
    assert abs(val - 4.0) < 1e-6


def test_nonfinite_integrand_reports_direction():
    g = sphere_grid(2, 64)

    def phi(u):
        out = np.ones(len(u))
        out[3] = np.inf
        return out

    with pytest.raises(IntegrationError) as info:
        integrate_sphere(g, phi)
    assert np.allclose(info.value.direction, g.nodes[3])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 14), st.integers(0, 14))
def test_circle_grid_exact_on_trig_polynomials(a, b):
    # int cos^a sin^b over the circle, against the closed form via Beta functions
    from scipy.special import beta

    g = sphere_grid(2, 16)
    val = integrate_sphere(g, lambda u: u[:, 0] ** a * u[:, 1] ** b)
    exact = 0.0 if (a % 2 or b % 2) else 2 * beta((a + 1) / 2, (b + 1) / 2)
    if a + b <= g.exactness_degree:
        assert abs(val - exact) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10), st.integers(0, 10), st.integers(0, 10))
def test_sphere_grid_exact_on_monomials(a, b, c):
    from scipy.special import gamma

    g = sphere_grid(3, 16)
    val = integrate_sphere(g, lambda u: u[:, 0] ** a * u[:, 1] ** b * u[:, 2] ** c)
    if a % 2 or b % 2 or c % 2:
        exact = 0.0
    else:
        ba, bb, bc = (a + 1) / 2, (b + 1) / 2, (c + 1) / 2
        exact = 2 * gamma(ba) * gamma(bb) * gamma(bc) / gamma(ba + bb + bc)
    if a + b + c <= g.exactness_degree:
        assert abs(val - exact) < 1e-10


# --- density integrals ------------------------------------------------------


def test_disc_area():
    assert abs(integrate_density(indicator(ball(2))) - np.pi) < 1e-6


def test_disc_second_moment():
    val = integrate_density(indicator(ball(2)), lambda x: x[:, 0] ** 2)
    assert abs(val - np.pi / 4) < 1e-6


def test_shifted_disc_area():
    f = indicator(ball(2)).translate(np.array([0.7, -2.3]))
    assert abs(integrate_density(f) - np.pi) < 1e-6


def test_indicator_lp_norm_is_volume_power():
    K = Ellipsoid(np.diag([2.0, 0.5]))
    for lam in (0.7, 2.0, 3.5):
        assert abs(lp_integral(indicator(K), lam) - np.pi ** (1 / lam)) < 1e-6


def test_sup_norm_of_indicator():
    assert lp_integral(indicator(ball(2)), np.inf) == pytest.approx(1.0, abs=1e-12)


def test_scaled_indicator_l2():
    f = indicator(ball(2)).scale(2.0)
    assert abs(lp_integral(f, 2.0) - 2 * np.sqrt(np.pi)) < 1e-6


def test_ball_volume_3d():
    assert abs(integrate_density(indicator(ball(3))) - 4 * np.pi / 3) < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-2, 2), st.floats(-2, 2))
def test_linear_in_kernel_and_homogeneous_in_amplitude(a, s, t):
    f = ball_profile(2, 2.0, 2.0, np.array([[1.2, 0.3], [0.0, 0.8]]))
    k1 = lambda x: x[:, 0] ** 2  # noqa: E731
    k2 = lambda x: 1.0 + x[:, 1]  # noqa: E731
    combined = integrate_density(f, lambda x: s * k1(x) + t * k2(x))
    separate = s * integrate_density(f, k1) + t * integrate_density(f, k2)
    assert combined == pytest.approx(separate, rel=1e-10, abs=1e-10)
    assert integrate_density(f.scale(a), k1) == pytest.approx(a * integrate_density(f, k1), rel=1e-12)


def test_refinement_is_stable():
    f = ball_profile(2, 0.8, 2.0, np.array([[1.0, 0.4], [-0.2, 1.3]]))
    coarse = integrate_density(f, settings=QuadratureSettings(density_angles=256, radial_nodes=32))
    fine = integrate_density(f, settings=QuadratureSettings(density_angles=512, radial_nodes=64))
    assert abs(coarse - fine) < 1e-6 * abs(fine)


def test_agrees_with_monte_carlo_on_random_pairs():
    rng = np.random.default_rng(11)
    misses = 0
    for i in range(20):
        B = rng.normal(size=(2, 2)) + 2 * np.eye(2)
        lam = float(rng.choice([1.5, 2.0, np.inf]))
        f = ball_profile(2, lam, 2.0, B, center=rng.uniform(-0.5, 0.5, 2))
        w = rng.normal(size=2)
        kernel = lambda x, w=w: (x @ w) ** 2  # noqa: E731
        est = mc_integral(f, kernel, samples=200_000, seed=i)
        misses += not est.agrees(integrate_density(f, kernel))
    # 3-sigma agreement on at least 95% of cases
    assert misses <= 1
