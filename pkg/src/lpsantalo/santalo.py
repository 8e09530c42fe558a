"""Santaló points, the mu-map and the L_p center of mass ``c_{f,p}``.

The classical Santaló point of a convex body ``K`` minimizes
``s -> vol((K - s)°)``; at the minimum the polar body has its center of mass at
the origin. For a density ``f`` the analogous point ``c_{f,p}`` is a zero of

    mu(alpha) = int_{M° M° f^alpha} z dz,     f^alpha(x) = f(x - alpha),

where ``M = M_{eps,p}`` is the asymmetric moment-body operator. ``mu`` is
evaluated in polar coordinates from the gauge of ``M° M° f^alpha``, itself a
spherical integral of the truncated radial function ``gamma_R`` of
``M° f^alpha``. The root is located by a coarse scan over the support followed
by Broyden iterations.

Sign convention: ``find_cfp`` returns ``c = -alpha*``, the point such that
``x -> f(x + c)`` is the balanced translate. For ``f(x) = p(|x - v|)`` this
gives ``c = v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.spatial import Delaunay

from .bodies import Ellipsoid, Polytope, StarBody, unit_ball_volume
from .lp_bodies import AsymParams, bracket_moments, constant_c
from .quadrature import QuadratureSettings, integrate_sphere, resolve_settings, sphere_grid

_CHUNK = 1 << 22


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget; ``best`` holds the best iterate."""

    def __init__(self, message, best=None, trace=None):
        super().__init__(message)
        self.best = best
        self.trace = trace or []


class CfpSearchError(ConvergenceError):
    """No zero of the mu-map was found inside the search ball."""


# ---------------------------------------------------------------------------
# classical centers
# ---------------------------------------------------------------------------


@dataclass
class SantaloResult:
    point: np.ndarray
    objective: float
    residual: float
    iterations: int = 0


def _radial_about_center(K, grid):
    """Center and radial values of ``K`` about it, without requiring 0 in K."""
    if isinstance(K, StarBody):
        return K.center, np.asarray(K.radial_fn(grid.nodes), float)
    if isinstance(K, Ellipsoid):
        return K.center, 1.0 / np.linalg.norm(grid.nodes @ K.matrix.T, axis=1)
    if isinstance(K, Polytope):
        c = K.centroid
        return c, K.translate(-c).radial(grid.nodes)
    return np.zeros(K.n), np.asarray(K.radial(grid.nodes, grid=grid), float)


def center_of_mass(K, grid=None):
    """``int_K z dz`` (not normalized by the volume).

    Computed as ``c vol(K) + (1/(n+1)) int_S r_c(xi)^{n+1} xi dxi`` with ``r_c``
    the radial function about the body's own center ``c``.
    """
    if isinstance(K, Polytope):
        return K.centroid * K.volume
    grid = grid if grid is not None else sphere_grid(K.n, resolve_settings(None, K.n).sphere_resolution)
    c, r = _radial_about_center(K, grid)
    if not np.all(np.isfinite(r)):
        raise ValueError("center of mass of an unbounded body")
    n = K.n
    vol = float(integrate_sphere(grid, r**n)) / n
    first = integrate_sphere(grid, (r ** (n + 1))[:, None] * grid.nodes) / (n + 1)
    return np.asarray(first + vol * np.asarray(c, float), float)


def centroid(K, grid=None):
    """Center of mass normalized by the volume."""
    grid = grid if grid is not None else sphere_grid(K.n, resolve_settings(None, K.n).sphere_resolution)
    return center_of_mass(K, grid) / volume_about_center(K, grid)


def volume_about_center(K, grid):
    _, r = _radial_about_center(K, grid)
    return float(integrate_sphere(grid, r**K.n)) / K.n


def _chebyshev_center(U, h):
    n = U.shape[1]
    res = optimize.linprog(
        np.r_[np.zeros(n), -1.0], A_ub=np.column_stack([U, np.ones(len(h))]), b_ub=h,
        bounds=[(None, None)] * n + [(0, None)], method="highs",
    )
    if not res.success or res.x[-1] <= 0:
        raise ValueError("body has empty interior")
    return res.x[:n]


def _polar_objective(h, U, w, s, n):
    d = h - U @ s
    if np.any(d <= 0):
        return np.inf, None, None, d
    dn = d ** (-n)
    F = float(w @ dn) / n
    grad = (w * dn / d) @ U
    return F, grad, dn, d


def _shifted_polar(K, s):
    """``(K - s)°`` of a polytope, exactly; ``None`` when ``s`` is not interior."""
    d = K.offsets - K.normals @ s
    if np.any(d <= 0):
        return None
    return Polytope(K.normals / d[:, None])


def santalo_point(K, tol=1e-9, grid=None, max_iter=100, start=None):
    """Minimize ``vol((K - s)°)`` by a guarded Newton iteration.

    The objective ``F(s) = (1/n) int h_{K-s}^{-n}`` is strictly convex on the
    interior of ``K``; its gradient is ``(n+1) int_{(K-s)°} z dz`` so the
    minimizer is the point where the polar body is centered. Steps are halved
    until they stay interior and decrease ``F``.

    For polytopes the objective and gradient come from the exact polar
    polytope; the grid only supplies the Newton Hessian.
    """
    grid = grid if grid is not None else sphere_grid(K.n, resolve_settings(None, K.n).sphere_resolution)
    n, U, w = K.n, grid.nodes, grid.weights
    h = np.asarray(K.support(U, grid=grid), float)

    def objective(s):
        F, g, dn, d = _polar_objective(h, U, w, s, n)
        if isinstance(K, Polytope):
            P = _shifted_polar(K, s)
            if P is None:
                return np.inf, None, None, d
            if np.isfinite(F):
                F = P.volume
                g = (n + 1) * F * P.centroid
        return F, g, dn, d

    s = _chebyshev_center(U, h) if start is None else np.asarray(start, float)
    F, g, dn, d = objective(s)
    if not np.isfinite(F):
        raise ValueError("starting point is not interior")
    residual = np.linalg.norm(g) / ((n + 1) * F)
    for it in range(1, max_iter + 1):
        if residual <= tol:
            return SantaloResult(s, F, residual, it - 1)
        Hs = (n + 1) * (U.T * (w * dn / d**2)) @ U
        step = -np.linalg.solve(Hs, g)
        t = 1.0
        for _ in range(60):
            F_new, g_new, dn_new, d_new = objective(s + t * step)
            if F_new <= F:
                break
            t *= 0.5
        else:
            break
        s, F, g, dn, d = s + t * step, F_new, g_new, dn_new, d_new
        residual = np.linalg.norm(g) / ((n + 1) * F)
    if residual <= tol:
        return SantaloResult(s, F, residual, max_iter)
    raise ConvergenceError(f"Santaló point iteration stalled at residual {residual:.3g}",
                           best=SantaloResult(s, F, residual, max_iter))


def polar_volume_at(K, s, grid=None):
    """``vol((K - s)°)``; ``inf`` when ``s`` is not interior (exact for polytopes)."""
    if isinstance(K, Polytope):
        P = _shifted_polar(K, np.asarray(s, float))
        return np.inf if P is None else P.volume
    grid = grid if grid is not None else sphere_grid(K.n, resolve_settings(None, K.n).sphere_resolution)
    h = np.asarray(K.support(grid.nodes, grid=grid), float)
    return _polar_objective(h, grid.nodes, grid.weights, np.asarray(s, float), K.n)[0]


def santalo_region_test(K, x, grid=None):
    """``vol(K) vol((K - x)°) <= omega_n^2`` for an interior point ``x``."""
    grid = grid if grid is not None else sphere_grid(K.n, resolve_settings(None, K.n).sphere_resolution)
    pv = polar_volume_at(K, x, grid)
    if not np.isfinite(pv):
        raise ValueError("point is not interior to the body")
    vol = K.volume if isinstance(K, (Ellipsoid, Polytope)) else volume_about_center(K, grid)
    return bool(vol * pv / unit_ball_volume(K.n) ** 2 <= 1.0)


# ---------------------------------------------------------------------------
# the mu-map
# ---------------------------------------------------------------------------


@dataclass
class MuValue:
    """One evaluation of the mu-map at a translate ``alpha``."""

    alpha: np.ndarray
    mu: np.ndarray  # int_{M°M°f^alpha} z dz
    volume: float  # vol(M°M°f^alpha)
    truncation_R: float  # inf when no truncation was needed
    converged: bool = True

    @property
    def centroid(self):
        return self.mu / self.volume


R_SCHEDULE = tuple(10.0**k for k in range(1, 9))


class MuMap:
    """Evaluator of ``alpha -> mu(alpha)`` for a fixed density and discretization.

    ``eps = 1`` is mapped to ``eps = 0``: the double polar ``M° M°`` is the same
    body for both, because ``M_{1,p}`` reflects ``M_{0,p}``.
    """

    def __init__(self, f, prm, settings=None):
        if prm.eps not in (0.0, 0.5, 1.0):
            raise ValueError("the mu-map is only defined for eps in {0, 1/2, 1}")
        self.f = f
        self.n = f.n
        self.settings = resolve_settings(settings, f.n)
        self.prm = AsymParams(prm.p, 0.0) if prm.eps == 1.0 else prm
        self.grid = sphere_grid(f.n, self.settings.sphere_resolution)
        cloud = f.cloud(self.settings)
        self.points, self.masses = cloud.points, cloud.masses
        U = self.grid.nodes
        self._gram = self.prm.bracket(U @ U.T) if U.shape[0] ** 2 <= 4_000_000 else None
        self.evaluations = 0

    def support_p(self, alpha):
        """``h(M f^alpha, xi)^p`` at the grid nodes."""
        return bracket_moments(self.grid.nodes, self.points + np.asarray(alpha, float), self.masses, self.prm)

    def gamma(self, alpha, R):
        """Radial function of ``M° f^alpha ∩ B_R`` at the grid nodes."""
        hp = self.support_p(alpha)
        with np.errstate(divide="ignore"):
            g = np.where(hp > 0, hp ** (-1.0 / self.prm.p), np.inf)
        return np.minimum(g, R)

    def delta_from_gamma(self, gamma, directions=None):
        """Gauge of ``M° (M° f^alpha ∩ B_R)`` (with the 1/(n+p) polar factor)."""
        n, p = self.n, self.prm.p
        mass = self.grid.weights * gamma ** (n + p) / (n + p)
        if directions is None and self._gram is not None:
            dp = self._gram @ mass
        else:
            D = self.grid.nodes if directions is None else np.atleast_2d(directions)
            dp = bracket_moments(D, self.grid.nodes, mass, self.prm)
        return dp ** (1.0 / p)

    def evaluate_at(self, alpha, R):
        g = self.gamma(alpha, R)
        return self._integrate(alpha, g, R)

    def _integrate(self, alpha, gamma, R):
        n = self.n
        if not np.all(np.isfinite(gamma)):
            raise ValueError("truncation radius required: M° f^alpha is unbounded")
        d = self.delta_from_gamma(gamma)
        vol = float(integrate_sphere(self.grid, d ** (-n))) / n
        mu = integrate_sphere(self.grid, (d ** (-n - 1))[:, None] * self.grid.nodes) / (n + 1)
        self.evaluations += 1
        return MuValue(np.asarray(alpha, float), np.asarray(mu, float), vol, R)

    def __call__(self, alpha, tol=1e-12):
        """Evaluate ``mu(alpha)``, escalating ``R`` only if truncation is active."""
        alpha = np.asarray(alpha, float)
        hp = self.support_p(alpha)
        if np.all(hp > 0):
            return self._integrate(alpha, hp ** (-1.0 / self.prm.p), np.inf)
        with np.errstate(divide="ignore"):
            g_full = np.where(hp > 0, hp ** (-1.0 / self.prm.p), np.inf)
        prev = None
        for R in R_SCHEDULE:
            val = self._integrate(alpha, np.minimum(g_full, R), R)
            if prev is not None and np.linalg.norm(val.mu - prev.mu) <= tol * max(1.0, np.linalg.norm(val.mu)):
                return val
            prev = val
        prev.converged = False
        return prev


def truncated_delta(f, alpha, xi, R, prm, settings=None):
    """``delta_R(alpha, xi)``: gauge of ``M°(M° f^alpha ∩ B_R)`` at directions ``xi``."""
    if R <= 1:
        raise ValueError("truncation radius must exceed 1")
    mm = MuMap(f, prm, settings)
    return mm.delta_from_gamma(mm.gamma(alpha, R), np.atleast_2d(np.asarray(xi, float)))


def delta_lower_bound(f, T, prm, R=np.inf, settings=None):
    """``eps(T)``: a lower bound of ``delta_R(alpha, xi)`` over ``|alpha| <= T``.

    With ``D`` the support radius, ``h(M f^alpha) <= ||f||_1^{1/p} (D + T)``,
    so ``M° f^alpha`` contains the ball of radius ``rho = 1/(A + B T)`` and
    ``delta_R >= (int_{B_rho} <xi, z>_+^p dz)^{1/p}``.
    """
    n, p = f.n, prm.p
    D = support_radius(f, settings)
    mass = lp_mass(f, settings)
    rho = min(1.0 / (mass ** (1.0 / p) * (D + T)), R)
    return (rho ** (n + p) * constant_c(n, p) * unit_ball_volume(n) / 2.0) ** (1.0 / p)


def lp_mass(f, settings=None):
    return float(f.cloud(settings).masses.sum())


def support_radius(f, settings=None):
    """``D = max |z|`` over the support, estimated from the quadrature cloud."""
    pts = f.cloud(settings).points
    D = float(np.max(np.linalg.norm(pts, axis=1)))
    if f.bounded:
        lo, hi = f.box
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(f.n, -1).T
        D = min(D * (1 + 1e-12), float(np.max(np.linalg.norm(corners, axis=1)))) if D > 0 else D
    return D


def mu(f, alpha, prm, R=None, settings=None, tol=1e-12):
    """``mu(alpha) = int_{M°M°f^alpha} z dz`` (``R=None``: escalate as needed)."""
    mm = MuMap(f, prm, settings)
    val = mm(alpha, tol) if R is None else mm.evaluate_at(alpha, R)
    if not val.converged:
        raise ConvergenceError("truncation escalation did not stabilize", best=val)
    return val.mu


# ---------------------------------------------------------------------------
# root search
# ---------------------------------------------------------------------------


def broyden_solve(F, x0, tol, J0=None, fd_step=1e-5, max_iter=60, max_step=None):
    """Solve ``F(x) = 0`` by Broyden's method with a backtracking guard.

    The initial Jacobian is ``J0`` or a forward-difference estimate. Each step
    is halved until ``|F|`` decreases; a stalled step triggers a fresh
    finite-difference Jacobian. Returns ``(x, Fx, J, trace)``.
    """
    x = np.asarray(x0, float).copy()
    Fx = np.asarray(F(x), float)
    n = x.size
    trace = [(x.copy(), float(np.linalg.norm(Fx)))]

    def fd_jacobian(x, Fx):
        J = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = fd_step
            J[:, i] = (np.asarray(F(x + e), float) - Fx) / fd_step
        return J

    J = fd_jacobian(x, Fx) if J0 is None else np.array(J0, float)
    fresh = J0 is None
    for _ in range(max_iter):
        if np.linalg.norm(Fx) <= tol:
            break
        try:
            dx = -np.linalg.solve(J, Fx)
        except np.linalg.LinAlgError:
            dx = -np.linalg.lstsq(J, Fx, rcond=None)[0]
        if max_step is not None and np.linalg.norm(dx) > max_step:
            dx *= max_step / np.linalg.norm(dx)
        t, accepted = 1.0, False
        for _ in range(30):
            x_new = x + t * dx
            F_new = np.asarray(F(x_new), float)
            if np.all(np.isfinite(F_new)) and np.linalg.norm(F_new) < np.linalg.norm(Fx):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if fresh:
                break
            J, fresh = fd_jacobian(x, Fx), True
            continue
        s, y = x_new - x, F_new - Fx
        J = J + np.outer(y - J @ s, s) / (s @ s)
        x, Fx, fresh = x_new, F_new, False
        trace.append((x.copy(), float(np.linalg.norm(Fx))))
    return x, Fx, J, trace


@dataclass
class CfpResult:
    """Result of :func:`find_cfp`.

    ``c`` is the balancing point (``x -> f(x + c)`` has a centered double polar),
    ``mu_residual`` the distance of the centroid of ``M° M° f^{-c}`` from the
    origin, ``search_radius`` the radius ``T`` of the ball guaranteed to contain
    a zero and ``truncation_R`` the radius used by the last evaluation
    (``inf`` when ``M° f`` was bounded there).
    """

    c: np.ndarray
    mu_residual: float
    search_radius: float
    truncation_R: float
    diameter: float = float("nan")
    inside_hull: bool = True
    candidates: list = field(default_factory=list)
    evaluations: int = 0
    trace: list = field(default_factory=list)

    def metadata(self):
        return {
            "c": self.c.tolist(),
            "mu_residual": self.mu_residual,
            "search_radius": self.search_radius,
            "truncation_R": None if np.isinf(self.truncation_R) else self.truncation_R,
            "candidates": [list(map(float, c)) for c in self.candidates],
            "inside_hull": self.inside_hull,
        }


SEARCH_A = 0.75


def search_radius(D, a=SEARCH_A):
    """Smallest convenient ``T`` with ``T^2 - T D > a T (T + D)``, padded by 1%."""
    return 1.01 * D * (1 + a) / (1 - a)


def coarse_settings(n):
    if n == 2:
        return QuadratureSettings(sphere_resolution=256, density_angles=128, radial_nodes=24, subdivisions=32)
    return QuadratureSettings(sphere_resolution=20, density_angles=16, radial_nodes=16, subdivisions=12)


def _scan_region(f, settings):
    if f.bounded:
        return f.box
    c = f.cloud(settings)
    lo, hi = [], []
    for k in range(f.n):
        order = np.argsort(c.points[:, k])
        cdf = np.cumsum(c.masses[order]) / c.masses.sum()
        lo.append(c.points[order][np.searchsorted(cdf, 0.005), k])
        hi.append(c.points[order][np.searchsorted(cdf, 0.995), k])
    return np.array(lo), np.array(hi)


def _hull_test(f, settings):
    if not f.bounded:
        return lambda x: np.ones(len(np.atleast_2d(x)), bool)
    tri = Delaunay(f.cloud(settings).points[::1])
    return lambda x: tri.find_simplex(np.atleast_2d(x)) >= 0


def find_cfp(f, prm, tol=1e-9, settings=None, scan=None, start=None, max_iter=60):
    """Locate ``c_{f,p}``: the zero of the mu-map, returned as ``c = -alpha``.

    For ``eps = 1/2`` every double polar is origin-symmetric and ``c = 0``.
    Otherwise (``eps`` in {0, 1}) the centroid of ``M° M° f^alpha`` is driven
    to zero: a coarse scan over the support (restricted to its convex hull)
    picks a start and records local minima of ``|mu|`` as candidates, Broyden
    iterations polish the best one on a coarse discretization and then on
    the requested one.
    """
    if prm.eps not in (0.0, 0.5, 1.0):
        raise ValueError("c_{f,p} is only available for eps in {0, 1/2, 1}")
    full = resolve_settings(settings, f.n)
    D = support_radius(f, full)
    T = search_radius(D)
    fine = MuMap(f, prm, full)
    if prm.eps == 0.5:
        val = fine(np.zeros(f.n))
        return CfpResult(np.zeros(f.n), float(np.linalg.norm(val.centroid)), T, val.truncation_R,
                         _diameter(fine, val), True, [], fine.evaluations)

    def G(mm):
        return lambda c: mm(-np.asarray(c, float)).centroid

    candidates = []
    if start is None:
        coarse = MuMap(f, prm, coarse_settings(f.n))
        lo, hi = _scan_region(f, full)
        m = scan or (9 if f.n == 2 else 5)
        axes = [np.linspace(a, b, m + 2)[1:-1] for a, b in zip(lo, hi)]
        pts = np.array(np.meshgrid(*axes, indexing="ij")).reshape(f.n, -1).T
        inside = _hull_test(f, full)(pts)
        vals = np.full(pts.shape[0], np.inf)
        for i in np.flatnonzero(inside):
            v = coarse(-pts[i])
            vals[i] = np.linalg.norm(v.centroid)
        grid_vals = vals.reshape([m] * f.n)
        for idx in np.ndindex(*grid_vals.shape):
            v = grid_vals[idx]
            if not np.isfinite(v):
                continue
            nb = [grid_vals[tuple(np.clip(np.array(idx) + d, 0, m - 1))]
                  for d in np.array(np.meshgrid(*[[-1, 0, 1]] * f.n, indexing="ij")).reshape(f.n, -1).T]
            if v <= min(nb):
                candidates.append(pts[np.ravel_multi_index(idx, grid_vals.shape)])
        if not np.isfinite(vals).any():
            raise CfpSearchError("no admissible scan point inside the support hull")
        x0 = pts[int(np.argmin(vals))]
        scale = float(np.max(hi - lo))
        x1, _, J, trace = broyden_solve(G(coarse), x0, tol=max(tol, 1e-10), fd_step=1e-6 * scale,
                                        max_iter=max_iter, max_step=0.25 * scale)
    else:
        x1, J, trace = np.asarray(start, float), None, []
        scale = max(D, 1.0)
    x, Fx, _, trace2 = broyden_solve(G(fine), x1, tol=tol, J0=J, fd_step=1e-6 * scale,
                                     max_iter=max_iter, max_step=0.25 * scale)
    trace = trace + trace2
    residual = float(np.linalg.norm(Fx))
    if residual > tol or np.linalg.norm(x) > T:
        raise CfpSearchError(
            f"mu-map root search stalled: residual {residual:.3g} (tol {tol:.1g}) at c={x.tolist()}",
            best=x, trace=trace,
        )
    val = fine(-x)
    inside = bool(_hull_test(f, full)(x)[0])
    return CfpResult(x, residual, T, val.truncation_R, _diameter(fine, val), inside,
                     candidates, fine.evaluations, trace)


def _diameter(mm, val):
    """Diameter of ``M° M° f^alpha`` (twice the largest radius is an upper bound; we use width)."""
    g = mm.gamma(val.alpha, val.truncation_R)
    d = mm.delta_from_gamma(g)
    r = 1.0 / d
    pts = r[:, None] * mm.grid.nodes
    width = np.max(pts @ mm.grid.nodes.T, axis=0) + np.max(-pts @ mm.grid.nodes.T, axis=0)
    return float(np.max(width))


def balanced_translate(f, c):
    """``x -> f(x + c)``: the translate whose double polar is centered."""
    return f.translate(-np.asarray(c, float))
