"""Acceptance suite: one PASS/FAIL line per criterion.

Each test appends its line to ``conftest.ACCEPTANCE_LINES`` (echoed in the
pytest terminal summary) and prints it; ``python3 tests/test_acceptance.py``
runs the suite directly. All randomness is seeded.
"""

import time

import numpy as np
import pytest

from lpsantalo.bodies import (
    Ellipsoid, Polytope, StarBody, SupportBody, ball, polar_volume, random_ellipsoid, random_matrix, random_polygon,
    random_smooth_body, volume,
)
from lpsantalo.catalog import ball_profile, indicator, perturbed, profile, tilted
from lpsantalo.inequalities import (
    constant_r, constant_R, eval_bs_asymmetric, eval_bs_symmetric, eval_geometric, eval_moment_ineq, eval_renyi,
    proof_identity,
)
from lpsantalo.lp_bodies import AsymParams, asym_bracket, double_polar_moment_body, moment_body_K, polar_star
from lpsantalo.oracle import grid_minimize_polar, mc_integral, mc_polar_volume
from lpsantalo.quadrature import integrate_density, sphere_grid
from lpsantalo.santalo import balanced_translate, center_of_mass, find_cfp, santalo_point

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

P0 = AsymParams(2.0, 0.0)
G2 = sphere_grid(2, 1024)


def _record(k, passed, detail):
    line = f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def _polar_centroid(K, s):
    """``|int_{(K-s)°} z dz| / vol((K-s)°)``, recomputed from the polar body."""
    if isinstance(K, Polytope):
        P = K.translate(-s).polar()
        return float(np.linalg.norm(P.centroid))
    h = K.support(G2.nodes, grid=G2) - G2.nodes @ s
    star = StarBody.from_samples(G2.nodes, 1.0 / h)
    return float(np.linalg.norm(center_of_mass(star, G2)) / volume(star, G2))


def _asymmetric_density(rng):
    lam = float(rng.choice([1.5, 2.0, 3.0, np.inf]))
    K = random_polygon(rng, int(rng.integers(5, 9)))
    return tilted(profile(K, lam, 2.0), rng.uniform(-0.8, 0.8, 2)), lam


# ---------------------------------------------------------------------------


def test_criterion_1_blaschke_santalo_equality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_eq = 0.0
    for _ in range(10):
        E = random_ellipsoid(rng, 2)
        K = SupportBody(2, E.support)
        prod = volume(StarBody(2, E.radial), G2) * polar_volume(K, G2)
        worst_eq = max(worst_eq, abs(prod - np.pi**2))
    worst_ratio = 0.0
    for i in range(50):
        K = random_polygon(rng, 12, symmetric=True) if i % 2 else random_smooth_body(rng, symmetric=True)
        worst_ratio = max(worst_ratio, volume(K) * polar_volume(K) / np.pi**2)
    elapsed = time.perf_counter() - t0
    ok = worst_eq <= 1e-4 and worst_ratio <= 1 + 1e-4 and elapsed < 10
    assert _record(1, ok, f"ellipsoid |prod-pi^2| max {worst_eq:.2e}; symmetric max ratio {worst_ratio:.6f}; "
                          f"{elapsed:.1f}s")


def test_criterion_2_santalo_point_characterization():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst_res, worst_gap, all_ok = 0.0, 0.0, True
    for i in range(10):
        K = random_polygon(rng, int(rng.integers(5, 12))) if i % 2 else random_smooth_body(rng)
        s = santalo_point(K, tol=1e-9).point
        res = _polar_centroid(K, s)
        extent = float(np.max(K.support(np.eye(2)) + K.support(-np.eye(2))))
        step = extent / 200
        gap = np.abs(s - grid_minimize_polar(K, step))
        worst_res = max(worst_res, res)
        worst_gap = max(worst_gap, float(np.max(gap / step)))
        all_ok &= res <= 1e-6 and np.all(gap <= step)
    elapsed = time.perf_counter() - t0
    ok = all_ok and elapsed < 60
    assert _record(2, ok, f"max polar-centroid residual {worst_res:.2e}; max oracle gap {worst_gap:.2f} grid steps; "
                          f"{elapsed:.1f}s")


def test_criterion_3_haberl_schuster_constants():
    R, r = constant_R(2, 2.0), constant_r(2, 2.0)
    errs = []
    for eps in (0.0, 0.25, 0.5):
        errs.append(abs(eval_geometric(ball(2), "hs_polar", p=2.0, eps=eps).lhs / R - 1))
        errs.append(abs(eval_geometric(ball(2), "hs_volume", p=2.0, eps=eps).rhs / r - 1))
    radius = moment_body_K(ball(2), AsymParams(2.0, 0.25)).support(np.array([[1.0, 0.0]]))[0]
    cross = abs(radius / np.sqrt(np.pi / 8) - 1)
    closed = abs(R / (8 * np.pi**2) - 1) + abs(r * 8 - 1)
    ok = max(errs) <= 1e-3 and cross <= 1e-6 and closed <= 1e-12
    assert _record(3, ok, f"max rel err vs 8pi^2 and 1/8 over eps {{0,0.25,0.5}}: {max(errs):.2e}; "
                          f"moment-ball radius rel err {cross:.1e}")


def test_criterion_4_moment_inequality_saturation():
    rng = np.random.default_rng(404)
    bodies = [Ellipsoid(np.array([[1.3, 0.4], [-0.2, 0.7]])), random_polygon(rng, 7), random_smooth_body(rng)]
    worst_sat = 0.0
    for lam in (0.7, 2.0, np.inf):
        for K in bodies:
            worst_sat = max(worst_sat, abs(eval_moment_ineq(profile(K, lam, 2.0), K, lam, 2.0).ratio - 1))
    max_pert = 0.0
    for _ in range(100):
        K = random_polygon(rng, int(rng.integers(5, 12)))
        lam = float(rng.choice([0.7, 2.0, np.inf]))
        f = perturbed(profile(K, lam, 2.0), float(rng.uniform(0.1, 0.6)), rng.normal(size=2),
                      float(rng.uniform(0, 2 * np.pi)))
        max_pert = max(max_pert, eval_moment_ineq(f, K, lam, 2.0).ratio)
    ok = worst_sat <= 1e-3 and max_pert < 1
    assert _record(4, ok, f"profiles |ratio-1| max {worst_sat:.2e}; perturbed max ratio {max_pert:.6f}")


def test_criterion_5_symmetric_saturation_and_affine_invariance():
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(5):
        lam = float(rng.choice([0.7, 2.0, np.inf]))
        worst = max(worst, abs(eval_bs_symmetric(ball_profile(2, lam, 2.0, random_matrix(rng, 2)), lam, 2.0).ratio - 1))
    f = perturbed(ball_profile(2, 2.0, 2.0, np.diag([1.0, 0.6])), 0.3, np.array([0.3, 1.0]), 0.5)
    base = eval_bs_symmetric(f, 2.0, 2.0).ratio
    drift = max(abs(eval_bs_symmetric(f.linear_image(random_matrix(rng, 2)), 2.0, 2.0).ratio - base)
                for _ in range(3))
    ok = worst <= 1e-3 and drift <= 1e-4
    assert _record(5, ok, f"|ratio-1| max {worst:.2e} over 5 random B; affine drift {drift:.2e}")


@pytest.fixture(scope="module")
def asymmetric_cases():
    rng = np.random.default_rng(606)
    return [_asymmetric_density(rng) for _ in range(20)]


@pytest.fixture(scope="module")
def asymmetric_results(asymmetric_cases):
    return [find_cfp(f, P0, tol=1e-9) for f, _ in asymmetric_cases]


def test_criterion_6_asymmetric_case(asymmetric_cases, asymmetric_results):
    t0 = time.perf_counter()
    v = np.array([0.45, -0.3])
    rep = eval_bs_asymmetric(ball_profile(2, 2.0, 2.0, center=v), 2.0, 2.0, eps=0.0)
    point_err = float(np.max(np.abs(np.asarray(rep.cfp) - v)))
    sat_err = abs(rep.ratio - 1)
    worst_res, max_ratio, inside = 0.0, 0.0, True
    for (f, lam), res in zip(asymmetric_cases, asymmetric_results):
        worst_res = max(worst_res, res.mu_residual)
        inside &= res.inside_hull
        for eps in (0.0, 0.25):
            max_ratio = max(max_ratio, eval_bs_asymmetric(f, lam, 2.0, eps, cfp=res).ratio)
    # the root searches themselves ran in the fixture; time them here for the budget
    t1 = time.perf_counter()
    for f, _ in asymmetric_cases[:3]:
        find_cfp(f, P0, tol=1e-9)
    search = (time.perf_counter() - t1) / 3 * 20
    elapsed = time.perf_counter() - t0 - (time.perf_counter() - t1) + search
    ok = (point_err <= 1e-6 and sat_err <= 1e-3 and worst_res <= 1e-6 and inside and max_ratio <= 1 + 1e-3
          and elapsed < 300)
    assert _record(6, ok, f"|c-v| {point_err:.1e}, |ratio-1| {sat_err:.1e}; 20 densities: max mu-residual "
                          f"{worst_res:.1e}, inside hull {inside}, max ratio {max_ratio:.6f}; ~{elapsed:.0f}s")


def test_criterion_7_two_function_saturation():
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(3):
        lam = float(rng.choice([2.0, np.inf]))
        B = random_matrix(rng, 2)
        f = ball_profile(2, lam, 2.0, B)
        g = ball_profile(2, lam, 2.0, np.linalg.inv(B).T)
        worst = max(worst, abs(eval_renyi(f, g, lam, 2.0).ratio - 1))
    assert _record(7, worst <= 1e-2, f"|ratio-1| max {worst:.2e} over 3 random B")


def test_criterion_8_reverification_and_equivariance(asymmetric_cases, asymmetric_results):
    worst = 0.0
    for (f, _), res in zip(asymmetric_cases, asymmetric_results):
        g = balanced_translate(f, res.c)
        body = polar_star(double_polar_moment_body(g, P0), G2)
        worst = max(worst, float(np.linalg.norm(center_of_mass(body, G2))) / res.diameter)
    rng = np.random.default_rng(808)
    drift = 0.0
    for (f, _), res in list(zip(asymmetric_cases, asymmetric_results))[:5]:
        w = rng.uniform(-1, 1, 2)
        drift = max(drift, float(np.max(np.abs(find_cfp(f.translate(w), P0, tol=1e-9).c - res.c - w))))
    ok = worst <= 1e-6 and drift <= 2e-6
    assert _record(8, ok, f"max |com|/diameter {worst:.1e} over 20 points; equivariance drift {drift:.1e} "
                          f"over 5 translates")


def test_criterion_9_monte_carlo_agreement(asymmetric_cases):
    """Twenty volumes/integrals from criteria 1-8 against seeded 10^6-sample estimates."""
    rng = np.random.default_rng(909)
    cases = []
    for _ in range(4):  # criterion 1: ellipsoid polar volumes
        E = random_ellipsoid(rng, 2)
        cases.append(("polar vol ellipsoid", lambda s, E=E: mc_polar_volume(E.support, 2, 10**6, s),
                      polar_volume(SupportBody(2, E.support), G2)))
    for _ in range(4):  # criterion 1: symmetric polygon polar volumes and areas
        K = random_polygon(rng, 10, symmetric=True)
        cases.append(("polar vol polygon", lambda s, K=K: mc_polar_volume(K.support, 2, 10**6, s, 8192),
                      polar_volume(K)))
        cases.append(("area polygon", lambda s, K=K: mc_integral(indicator(K), None, 10**6, s), volume(K)))
    for _ in range(3):  # criterion 4: int f g(K, x)^p
        K = random_polygon(rng, 7)
        f = perturbed(profile(K, 2.0, 2.0), 0.3, rng.normal(size=2), 0.4)
        kern = lambda x, K=K: K.gauge(x) ** 2  # noqa: E731
        cases.append(("moment integral", lambda s, f=f, k=kern: mc_integral(f, k, 10**6, s),
                      integrate_density(f, kern)))
    for f, _ in asymmetric_cases[:3]:  # criterion 6: masses and bracket moments
        y = rng.normal(size=2)
        y /= np.linalg.norm(y)
        kern = lambda x, y=y: asym_bracket(y, x, P0)  # noqa: E731
        cases.append(("bracket moment", lambda s, f=f, k=kern: mc_integral(f, k, 10**6, s),
                      integrate_density(f, kern)))
    B = random_matrix(rng, 2)
    g = ball_profile(2, 2.0, 2.0, B)
    cases.append(("L1 mass profile", lambda s: mc_integral(g, None, 10**6, s), integrate_density(g)))
    cases.append(("L2 mass profile", lambda s: mc_integral(g, lambda x: g(x), 10**6, s),
                  integrate_density(g, lambda x: g(x))))
    assert len(cases) == 20
    misses = []
    for k, (name, est_fn, ref) in enumerate(cases):
        est = est_fn(9000 + k)
        if est.inconclusive or not est.agrees(ref):
            misses.append(f"{name} z={(est.value - ref) / est.stderr:+.2f}")
    ok = not misses
    assert _record(9, ok, f"{20 - len(misses)}/20 within 3 standard errors at 1e6 samples"
                          + (f" (misses: {', '.join(misses)})" if misses else ""))


def test_criterion_10_proof_identity():
    rng = np.random.default_rng(1010)
    worst = 0.0
    for i in range(20):
        f, _ = _asymmetric_density(rng)
        if i % 2:
            f = perturbed(ball_profile(2, 2.0, 2.0, random_matrix(rng, 2)), 0.3, rng.normal(size=2), 0.2)
        eps = float(rng.choice([0.0, 0.5, 1.0]))
        lhs, rhs = proof_identity(f, AsymParams(2.0, eps))
        worst = max(worst, abs(lhs / rhs - 1))
    assert _record(10, worst <= 1e-5, f"max relative gap {worst:.2e} over 20 densities")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
