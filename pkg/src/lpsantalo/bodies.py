"""Star bodies, convex bodies and polarity.

Two generic representations are provided:

* :class:`StarBody` -- a radial function ``r(K, u)`` about a star center;
* :class:`SupportBody` -- a support function ``h_K(u)`` on unit vectors,
  extended to R^n by degree-1 homogeneity.

Each can produce the other function numerically (for convex bodies), and
:class:`Ellipsoid` / :class:`Polytope` provide both in closed form. Volumes,
polar volumes and centroids are spherical integrals of radial or support
powers, evaluated on a :class:`~lpsantalo.quadrature.DirectionGrid`.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, cKDTree
from scipy.interpolate import RegularGridInterpolator

from .quadrature import SPHERE_AREA, integrate_sphere, sphere_grid

DEFAULT_RESOLUTION = {2: 1024, 3: 48}


def unit_ball_volume(n):
    from scipy.special import gammaln

    return float(np.exp(0.5 * n * np.log(np.pi) - gammaln(0.5 * n + 1.0)))


def _default_grid(n, grid):
    return grid if grid is not None else sphere_grid(n, DEFAULT_RESOLUTION[n])


def _as_points(x, n):
    x = np.asarray(x, float)
    if x.shape[-1] != n:
        raise ValueError(f"expected points with last axis {n}, got shape {x.shape}")
    return x


def _normalize(x):
    norm = np.linalg.norm(x, axis=-1)
    safe = np.where(norm > 0, norm, 1.0)
    return x / safe[..., None], norm


# ---------------------------------------------------------------------------
# extremum search on the sphere
# ---------------------------------------------------------------------------


def _tangent_basis(u):
    """Orthonormal basis of the tangent space at each row of ``u``: (M, n-1, n)."""
    if u.shape[-1] == 2:
        return np.stack([-u[:, 1], u[:, 0]], axis=-1)[:, None, :]
    a = np.where(np.abs(u[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    e1 = a - np.sum(a * u, axis=1, keepdims=True) * u
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(u, e1)
    return np.stack([e1, e2], axis=1)


def _pattern_offsets(n):
    if n == 2:
        return np.array([[-1.0], [0.0], [1.0]])
    g = np.array([-1.0, 0.0, 1.0])
    return np.array(np.meshgrid(g, g, indexing="ij")).reshape(2, -1).T


def _compass_search(objective, start, spacing, maximize, tol=1e-10, max_iter=200):
    """Minimize/maximize ``objective(U)`` over unit vectors, one problem per row.

    ``objective`` maps candidates ``(M, k, n)`` to values ``(M, k)``. The search
    moves to the best of a small stencil around each current point and halves
    the stencil whenever the center wins. Suitable for unimodal objectives.
    """
    sign = -1.0 if maximize else 1.0
    u = start.copy()
    M, n = u.shape
    offs = _pattern_offsets(n)
    centre = int(np.argmin(np.abs(offs).sum(axis=1)))
    step = np.full(M, float(spacing))
    active = np.ones(M, bool)
    best = sign * objective(u[:, None, :], np.arange(M))[:, 0]
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        E = _tangent_basis(u[idx])
        cand = u[idx, None, :] + step[idx, None, None] * np.einsum("kd,mdn->mkn", offs, E)
        cand, _ = _normalize(cand)
        vals = sign * objective(cand, idx)
        j = np.argmin(vals, axis=1)
        improved = (j != centre) & (vals[np.arange(idx.size), j] < best[idx])
        moved = idx[improved]
        u[moved] = cand[improved, j[improved]]
        best[moved] = vals[improved, j[improved]]
        shrink = idx[~improved]
        step[shrink] *= 0.5
        active[shrink[step[shrink] < tol]] = False
    return u, sign * best


def radial_from_support(support, xi, grid):
    """Radial function of a convex body from its support function.

    Uses ``r_K(x) = min_u h_K(u) / <u, x>`` over ``<u, x> > 0``: a discrete
    minimum over ``grid`` followed by a compass search. ``support`` maps unit
    vectors ``(..., n)`` to support values. Requires the origin in the interior.
    """
    xi = np.atleast_2d(np.asarray(xi, float))
    xi, _ = _normalize(xi)
    U = grid.nodes
    hU = np.asarray(support(U), float)
    if np.any(hU <= 0):
        raise ValueError("origin is not interior: support function not positive")
    start = np.empty_like(xi)
    for lo in range(0, xi.shape[0], 512):
        dots = xi[lo:lo + 512] @ U.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dots > 1e-12, hU[None, :] / dots, np.inf)
        start[lo:lo + 512] = U[np.argmin(ratio, axis=1)]

    def objective(cand, idx):
        dots = np.einsum("mkn,mn->mk", cand, xi[idx])
        h = np.asarray(support(cand.reshape(-1, cand.shape[-1])), float).reshape(dots.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(dots > 1e-12, h / dots, np.inf)

    _, best = _compass_search(objective, start, grid.spacing, maximize=False)
    return best


def support_from_radial(radial, y, grid):
    """Support function of a convex star body: ``h(y) = max_u r(u) <y, u>``."""
    y = np.atleast_2d(np.asarray(y, float))
    yu, ynorm = _normalize(y)
    U = grid.nodes
    rU = np.asarray(radial(U), float)
    start = np.empty_like(yu)
    for lo in range(0, yu.shape[0], 512):
        vals = rU[None, :] * (yu[lo:lo + 512] @ U.T)
        start[lo:lo + 512] = U[np.argmax(vals, axis=1)]

    def objective(cand, idx):
        dots = np.einsum("mkn,mn->mk", cand, yu[idx])
        r = np.asarray(radial(cand.reshape(-1, cand.shape[-1])), float).reshape(dots.shape)
        return r * dots

    _, best = _compass_search(objective, start, grid.spacing, maximize=True)
    return best * ynorm


# ---------------------------------------------------------------------------
# interpolation of sampled functions on the sphere
# ---------------------------------------------------------------------------


def _sphere_interpolant(grid_nodes, values):
    nodes = np.asarray(grid_nodes, float)
    values = np.asarray(values, float)
    n = nodes.shape[1]
    if n == 2:
        theta = np.mod(np.arctan2(nodes[:, 1], nodes[:, 0]), 2 * np.pi)
        order = np.argsort(theta)
        th, v = theta[order], values[order]

        def interp(u):
            u = np.asarray(u, float)
            t = np.mod(np.arctan2(u[..., 1], u[..., 0]), 2 * np.pi)
            return np.interp(t, th, v, period=2 * np.pi)

        return interp
    m = int(round(np.sqrt(nodes.shape[0] / 2)))
    if 2 * m * m == nodes.shape[0] and m >= 16:
        g = sphere_grid(3, m)
        if np.allclose(g.nodes, nodes, atol=1e-10):
            polar = np.arccos(np.clip(g.nodes[:: 2 * m, 2], -1, 1))
            azim = 2 * np.pi * np.arange(2 * m) / (2 * m)
            table = values.reshape(m, 2 * m)
            order = np.argsort(polar)
            polar, table = polar[order], table[order]
            table = np.concatenate([table, table[:, :1]], axis=1)
            azim = np.append(azim, 2 * np.pi)
            rgi = RegularGridInterpolator((polar, azim), table)

            def interp(u):
                u = np.asarray(u, float)
                shape = u.shape[:-1]
                u = u.reshape(-1, 3)
                p = np.clip(np.arccos(np.clip(u[:, 2], -1, 1)), polar[0], polar[-1])
                a = np.mod(np.arctan2(u[:, 1], u[:, 0]), 2 * np.pi)
                return rgi(np.column_stack([p, a])).reshape(shape)

            return interp
    tree = cKDTree(nodes)

    def interp(u):
        u = np.asarray(u, float)
        shape = u.shape[:-1]
        d, i = tree.query(u.reshape(-1, 3), k=4)
        w = 1.0 / np.maximum(d, 1e-14) ** 2
        return (np.sum(w * values[i], axis=1) / w.sum(axis=1)).reshape(shape)

    return interp


# ---------------------------------------------------------------------------
# body types
# ---------------------------------------------------------------------------


class StarBody:
    """Set ``{center + t u : 0 <= t <= radial_fn(u)}``.

    ``radial_fn`` maps unit vectors ``(..., n)`` to positive radii measured from
    ``center``. :meth:`radial` always measures from the origin, which must then
    lie in the interior; for a nonzero center the radius is found by ray
    intersection.
    """

    def __init__(self, n, radial_fn, center=None, label=""):
        self.n = int(n)
        self.radial_fn = radial_fn
        self.center = np.zeros(self.n) if center is None else np.asarray(center, float)
        self.label = label

    def __repr__(self):
        return f"StarBody(n={self.n}, center={self.center.tolist()}, label={self.label!r})"

    @property
    def centered(self):
        return not np.any(self.center)

    def radial(self, xi, grid=None):
        xi, _ = _normalize(_as_points(xi, self.n))
        if self.centered:
            r = np.asarray(self.radial_fn(xi), float)
        else:
            r = self._ray_radial(xi)
        if np.any(r <= 0):
            raise ValueError("radial function must be positive")
        return r

    def contains(self, x):
        """Membership test relative to the star center."""
        v, norm = _normalize(_as_points(x, self.n) - self.center)
        return norm <= np.asarray(self.radial_fn(v), float)

    def _ray_radial(self, xi):
        if not self.contains(np.zeros((1, self.n)))[0]:
            raise ValueError("origin is not inside the body")
        shape = xi.shape[:-1]
        xi = xi.reshape(-1, self.n)
        lo = np.zeros(xi.shape[0])
        hi = np.full(xi.shape[0], np.linalg.norm(self.center) + 1.0)
        for _ in range(200):
            out = ~self.contains(hi[:, None] * xi)
            if out.all():
                break
            hi = np.where(out, hi, 2 * hi)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            inside = self.contains(mid[:, None] * xi)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return (0.5 * (lo + hi)).reshape(shape)

    def gauge(self, x):
        x = _as_points(x, self.n)
        u, norm = _normalize(x)
        return norm / self.radial(u)

    def support(self, y, grid=None):
        """Support function; assumes the body is convex."""
        y = _as_points(y, self.n)
        shape = y.shape[:-1]
        h = support_from_radial(self.radial, y.reshape(-1, self.n), _default_grid(self.n, grid))
        return h.reshape(shape)

    def translate(self, s):
        return StarBody(self.n, self.radial_fn, self.center + np.asarray(s, float), self.label)

    def scale(self, lam):
        fn = self.radial_fn
        return StarBody(self.n, lambda u: lam * np.asarray(fn(u)), lam * self.center, self.label)

    def linear_image(self, A):
        A = np.asarray(A, float)
        Ainv = np.linalg.inv(A)
        fn = self.radial_fn

        def radial_fn(u):
            v, norm = _normalize(np.asarray(u, float) @ Ainv.T)
            return np.asarray(fn(v)) / norm

        return StarBody(self.n, radial_fn, A @ self.center, self.label)

    @classmethod
    def from_samples(cls, grid_nodes, values, center=None, label=""):
        values = np.asarray(values, float)
        if np.any(values <= 0):
            raise ValueError("radial samples must be positive")
        nodes = np.asarray(grid_nodes, float)
        return cls(nodes.shape[1], _sphere_interpolant(nodes, values), center, label)


class SupportBody:
    """Convex body given by its support function on unit vectors.

    ``support_fn`` maps unit vectors ``(..., n)`` to ``h_K``; :meth:`support`
    extends it to R^n by degree-1 homogeneity. Convexity is not checked
    structurally; see :func:`subadditivity_defect`.
    """

    def __init__(self, n, support_fn, label=""):
        self.n = int(n)
        self.support_fn = support_fn
        self.label = label

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, label={self.label!r})"

    def support(self, y, grid=None):
        y = _as_points(y, self.n)
        u, norm = _normalize(y)
        h = np.asarray(self._support_unit(u), float)
        return np.where(norm > 0, norm * h, 0.0)

    def _support_unit(self, u):
        return self.support_fn(u)

    def radial(self, xi, grid=None):
        """Radial function about the origin (origin must be interior)."""
        xi = _as_points(xi, self.n)
        shape = xi.shape[:-1]
        r = radial_from_support(self.support, xi.reshape(-1, self.n), _default_grid(self.n, grid))
        return r.reshape(shape)

    def gauge(self, x, grid=None):
        u, norm = _normalize(_as_points(x, self.n))
        return norm / self.radial(u, grid)

    def translate(self, s):
        s = np.asarray(s, float)
        h = self.support
        return SupportBody(self.n, lambda u: h(u) + np.asarray(u) @ s, self.label)

    def scale(self, lam):
        h = self.support
        return SupportBody(self.n, lambda u: lam * h(u), self.label)

    def linear_image(self, A):
        A = np.asarray(A, float)
        h = self.support
        return SupportBody(self.n, lambda u: h(np.asarray(u) @ A), self.label)

    @classmethod
    def from_samples(cls, grid_nodes, values, label=""):
        nodes = np.asarray(grid_nodes, float)
        return cls(nodes.shape[1], _sphere_interpolant(nodes, values), label)


class Ellipsoid(SupportBody):
    """The set ``{x : |B (x - c)| <= 1}``; both representations are exact."""

    def __init__(self, matrix, center=None, label="ellipsoid"):
        B = np.atleast_2d(np.asarray(matrix, float))
        if B.shape[0] != B.shape[1] or abs(np.linalg.det(B)) <= 1e-12:
            raise ValueError("ellipsoid matrix must be square and invertible")
        self.matrix = B
        self.inverse = np.linalg.inv(B)
        n = B.shape[0]
        self.center = np.zeros(n) if center is None else np.asarray(center, float)
        super().__init__(n, self._support_unit, label)

    def _support_unit(self, u):
        u = np.asarray(u, float)
        return np.linalg.norm(u @ self.inverse, axis=-1) + u @ self.center

    def radial(self, xi, grid=None):
        xi, _ = _normalize(_as_points(xi, self.n))
        Bc = self.matrix @ self.center
        if Bc @ Bc >= 1.0:
            raise ValueError("origin is not interior to the ellipsoid")
        Bx = xi @ self.matrix.T
        a = np.sum(Bx * Bx, axis=-1)
        b = Bx @ Bc
        return (b + np.sqrt(b * b - a * (Bc @ Bc - 1.0))) / a

    def gauge(self, x, grid=None):
        u, norm = _normalize(_as_points(x, self.n))
        return norm / self.radial(u)

    def contains(self, x):
        return np.linalg.norm((_as_points(x, self.n) - self.center) @ self.matrix.T, axis=-1) <= 1.0

    @property
    def volume(self):
        return unit_ball_volume(self.n) / abs(np.linalg.det(self.matrix))

    @property
    def centroid(self):
        return self.center.copy()

    def translate(self, s):
        return Ellipsoid(self.matrix, self.center + np.asarray(s, float), self.label)

    def scale(self, lam):
        return Ellipsoid(self.matrix / lam, lam * self.center, self.label)

    def linear_image(self, A):
        A = np.asarray(A, float)
        return Ellipsoid(self.matrix @ np.linalg.inv(A), A @ self.center, self.label)

    def polar(self):
        """Polar body of a centered ellipsoid, ``{|B^{-T} x| <= 1}``."""
        if np.any(self.center):
            raise ValueError("closed-form polar only for centered ellipsoids")
        return Ellipsoid(self.inverse.T, label=f"{self.label}°")

    def star_body(self):
        return StarBody(self.n, self.radial, label=self.label)


def ball(n, radius=1.0, center=None):
    return Ellipsoid(np.eye(n) / radius, center, label="ball")


class Polytope(SupportBody):
    """Convex hull of finitely many points, with exact support and radial functions."""

    def __init__(self, vertices, label="polytope"):
        pts = np.atleast_2d(np.asarray(vertices, float))
        hull = ConvexHull(pts)
        self.vertices = pts[hull.vertices]
        self.hull = hull
        self.normals = hull.equations[:, :-1]
        self.offsets = -hull.equations[:, -1]
        super().__init__(pts.shape[1], self._support_unit, label)

    def _support_unit(self, u):
        return np.max(np.asarray(u, float) @ self.vertices.T, axis=-1)

    @property
    def origin_interior(self):
        return bool(np.all(self.offsets > 1e-12))

    def radial(self, xi, grid=None):
        if not self.origin_interior:
            raise ValueError("origin is not interior to the polytope")
        xi, _ = _normalize(_as_points(xi, self.n))
        dots = xi @ self.normals.T
        with np.errstate(divide="ignore"):
            t = np.where(dots > 0, self.offsets / np.where(dots > 0, dots, 1.0), np.inf)
        return np.min(t, axis=-1)

    def gauge(self, x, grid=None):
        if not self.origin_interior:
            raise ValueError("origin is not interior to the polytope")
        return np.maximum(np.max(_as_points(x, self.n) @ (self.normals / self.offsets[:, None]).T, axis=-1), 0.0)

    def contains(self, x):
        return np.all(_as_points(x, self.n) @ self.normals.T <= self.offsets + 1e-12, axis=-1)

    @property
    def volume(self):
        return float(self.hull.volume)

    @property
    def centroid(self):
        """Exact center of mass (normalized by the volume)."""
        tri = Delaunay(self.vertices)
        simp = self.vertices[tri.simplices]
        vols = np.abs(np.linalg.det(simp[:, 1:] - simp[:, :1])) / np.prod(np.arange(1, self.n + 1))
        return (vols[:, None] * simp.mean(axis=1)).sum(axis=0) / vols.sum()

    @property
    def vertex_angles(self):
        if self.n != 2:
            raise ValueError("vertex angles only for polygons")
        v = self.vertices
        return np.mod(np.arctan2(v[:, 1], v[:, 0]), 2 * np.pi)

    def translate(self, s):
        return Polytope(self.vertices + np.asarray(s, float), self.label)

    def scale(self, lam):
        return Polytope(lam * self.vertices, self.label)

    def linear_image(self, A):
        return Polytope(self.vertices @ np.asarray(A, float).T, self.label)

    def star_body(self):
        return StarBody(self.n, self.radial, label=self.label)

    def polar(self):
        """``P°`` for the origin interior: the hull of ``a_i / b_i`` over facets ``<a_i, x> <= b_i``."""
        if not self.origin_interior:
            raise ValueError("origin is not interior to the polytope")
        return Polytope(self.normals / self.offsets[:, None], label=f"{self.label}°")


def triangle(vertices=((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))):
    return Polytope(vertices, label="triangle")


def half_ball(n=2, star_center=None):
    """The half ball ``{|x| <= 1, x_1 >= 0}`` as a star body about an interior point."""
    c = np.zeros(n)
    c[0] = 0.5
    if star_center is not None:
        c = np.asarray(star_center, float)
    if not (c[0] > 0 and c @ c < 1):
        raise ValueError("star center must be interior to the half ball")

    def radial_fn(u):
        u = np.asarray(u, float)
        b = u @ c
        t_ball = -b + np.sqrt(b * b - (c @ c - 1.0))
        with np.errstate(divide="ignore"):
            t_plane = np.where(u[..., 0] < 0, -c[0] / np.where(u[..., 0] < 0, u[..., 0], -1.0), np.inf)
        return np.minimum(t_ball, t_plane)

    return StarBody(n, radial_fn, center=c, label="half_ball")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def polar_support_from_gauge(K):
    """Support function of ``K°`` from ``h_{K°} = g_K = 1 / r_K`` (K convex, origin interior)."""

    def h(u):
        r = np.asarray(K.radial(u), float)
        if np.any(r <= 0):
            raise ValueError("radial function must be positive")
        return 1.0 / r

    if isinstance(K, Ellipsoid) and not np.any(K.center):
        return K.polar()
    return SupportBody(K.n, h, label=f"{getattr(K, 'label', '')}°")


def polar_body(K):
    """``K°`` as a star body, using ``r(K°, u) = 1 / h_K(u)`` (``inf`` where ``h_K <= 0``)."""

    def r(u):
        h = np.asarray(K.support(u), float)
        with np.errstate(divide="ignore"):
            return np.where(h > 0, 1.0 / np.where(h > 0, h, 1.0), np.inf)

    return StarBody(K.n, r, label=f"{getattr(K, 'label', '')}°")


def volume(K, grid=None):
    """``(1/n) int_S r(K, u)^n du``.

    Polytopes use their exact volume: their radial function has kinks at the
    vertex directions, where a uniform direction grid is only first-order
    accurate.
    """
    if isinstance(K, Polytope):
        return K.volume
    grid = _default_grid(K.n, grid)
    r = K.radial(grid.nodes, grid=grid)
    if np.any(np.isinf(r)):
        return np.inf
    return float(integrate_sphere(grid, r**K.n)) / K.n


def polar_volume(K, grid=None):
    """``vol(K°) = (1/n) int_S h_K(u)^{-n} du``; ``inf`` when ``h_K`` is not positive.

    Polytopes use the exact area/volume of their polar polytope.
    """
    if isinstance(K, Polytope):
        return K.polar().volume if K.origin_interior else np.inf
    grid = _default_grid(K.n, grid)
    h = np.asarray(K.support(grid.nodes, grid=grid), float)
    if np.any(h <= 0):
        return np.inf
    return float(integrate_sphere(grid, h ** (-K.n))) / K.n


def translate_body(K, s):
    """``K + s``; the support changes by ``<s, y>``, star bodies move their center."""
    return K.translate(s)


def convex_hull_sym_support(K, y, grid=None):
    """Support of ``co(K ∪ -K)`` at ``y``: max over grid nodes of ``r(K,u) |<y,u>|``."""
    grid = _default_grid(K.n, grid)
    r = K.radial(grid.nodes, grid=grid)
    y = np.asarray(y, float)
    return np.max(r * np.abs(np.atleast_2d(y) @ grid.nodes.T), axis=-1).reshape(y.shape[:-1])


def subadditivity_defect(K, rng, samples=200):
    """Largest ``h(y+z) - h(y) - h(z)`` over random pairs; <= 0 for convex bodies."""
    y = rng.standard_normal((samples, K.n))
    z = rng.standard_normal((samples, K.n))
    return float(np.max(K.support(y + z) - K.support(y) - K.support(z)))


# ---------------------------------------------------------------------------
# random bodies for tests and scenarios
# ---------------------------------------------------------------------------


def random_polygon(rng, vertices=12, symmetric=False, radii=(0.6, 1.4)):
    """Random convex polygon containing the origin in its interior."""
    m = vertices // 2 if symmetric else vertices
    theta = 2 * np.pi * (np.arange(m) + rng.uniform(0.1, 0.9, m)) / (m * (2 if symmetric else 1))
    rad = rng.uniform(*radii, m)
    pts = np.column_stack([rad * np.cos(theta), rad * np.sin(theta)])
    if symmetric:
        pts = np.vstack([pts, -pts])
    return Polytope(pts, label="random_polygon")


def random_polytope(rng, n=3, vertices=30, symmetric=False):
    pts = rng.standard_normal((vertices, n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= rng.uniform(0.7, 1.3, (vertices, 1))
    if symmetric:
        pts = np.vstack([pts, -pts])
    P = Polytope(pts, label="random_polytope")
    if not P.origin_interior:
        return random_polytope(rng, n, vertices, symmetric)
    return P


def random_matrix(rng, n, spread=(0.5, 2.0)):
    """Random matrix ``Q diag(s) Q'`` with singular values in ``spread``."""
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q1 @ np.diag(rng.uniform(*spread, n)) @ q2


def random_ellipsoid(rng, n=2, centered=True, spread=(0.5, 2.0)):
    c = None if centered else rng.uniform(-0.3, 0.3, n)
    B = random_matrix(rng, n, spread)
    if c is not None:
        c = c / max(1.0, 2 * np.linalg.norm(B @ c))
    return Ellipsoid(B, c, label="random_ellipsoid")


def random_smooth_body(rng, symmetric=False, modes=5, budget=0.6):
    """Planar convex body with support ``1 + sum a_k cos(k t) + b_k sin(k t)``.

    Coefficients satisfy ``sum (|a_k|+|b_k|)(k^2-1) < 1`` so that
    ``h + h'' > 0`` and the body is strictly convex.
    """
    ks = np.arange(2, 2 + modes)
    if symmetric:
        ks = ks[ks % 2 == 0]
    raw = rng.uniform(-1, 1, (ks.size, 2))
    scale = budget / np.sum(np.abs(raw).sum(axis=1) * (ks**2 - 1))
    coef = raw * scale
    if not symmetric:
        coef1 = rng.uniform(-0.2, 0.2, 2)
    else:
        coef1 = np.zeros(2)

    def h(u):
        u = np.asarray(u, float)
        t = np.arctan2(u[..., 1], u[..., 0])
        val = 1.0 + coef1[0] * np.cos(t) + coef1[1] * np.sin(t)
        for k, (a, b) in zip(ks, coef):
            val = val + a * np.cos(k * t) + b * np.sin(k * t)
        return val

    return SupportBody(2, h, label="random_smooth")


def random_star_body(rng, n=2, amplitude=0.25, modes=4, symmetric=False):
    """Smooth star body ``r = exp(amplitude * sum_j c_j phi_j)``; not necessarily convex."""
    dirs = rng.standard_normal((modes, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    coef = rng.uniform(-1, 1, modes) / modes
    power = rng.integers(1, 4, modes)
    if symmetric:
        power = 2 * power

    def r(u):
        u = np.asarray(u, float)
        val = np.zeros(u.shape[:-1])
        for d, c, k in zip(dirs, coef, power):
            val = val + c * (u @ d) ** k
        return np.exp(amplitude * val)

    return StarBody(n, r, label="random_star")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def body_to_json(K, grid, kind=None):
    """Sample a body on ``grid`` as ``{"n", "kind", "grid", "values"}``."""
    if kind is None:
        kind = "radial" if isinstance(K, StarBody) else "support"
    if kind == "radial":
        values = K.radial(grid.nodes, grid=grid)
    elif kind == "support":
        values = K.support(grid.nodes, grid=grid)
    else:
        raise ValueError(f"unknown body kind {kind!r}")
    return {
        "n": int(K.n),
        "kind": kind,
        "grid": np.asarray(grid.nodes).tolist(),
        "values": np.asarray(values, float).tolist(),
    }


def body_from_json(data):
    try:
        n, kind = int(data["n"]), data["kind"]
        nodes = np.asarray(data["grid"], float)
        values = np.asarray(data["values"], float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed body record: {exc}") from exc
    if nodes.ndim != 2 or nodes.shape[1] != n or values.shape != (nodes.shape[0],):
        raise ValueError("body record grid/values shapes do not match")
    if kind == "radial":
        return StarBody.from_samples(nodes, values)
    if kind == "support":
        return SupportBody.from_samples(nodes, values)
    raise ValueError(f"unknown body kind {kind!r}")


def sphere_area(n):
    return SPHERE_AREA[n]
