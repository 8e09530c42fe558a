"""L_p moment bodies, centroid bodies and their polar volumes.

Every body here has a support function of the form

    h(y)^p = sum_k m_k <y, z_k>_eps^p,

a weighted sum of asymmetric brackets over a point cloud. The cloud is either
the quadrature cloud of a density (moment body of a function) or the sphere
grid with masses ``w_j r_j^{n+p} / (n+p)`` (moment body of a star body via
polar coordinates). :class:`MomentBody` covers both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .bodies import SupportBody, StarBody, volume
from .quadrature import QuadratureSettings, integrate_sphere, resolve_settings, sphere_grid

_CHUNK = 1 << 22  # elements per bracket block


def omega(s):
    """Volume of the unit ball in dimension ``s`` (real ``s >= 0`` allowed)."""
    s = float(s)
    return float(np.exp(0.5 * s * np.log(np.pi) - gammaln(0.5 * s + 1.0)))


def constant_c(n, p):
    """Normalization making the L_p centroid body of the unit ball the unit ball.

    Equals ``int_B |z_1|^p dz / omega_n``.
    """
    return omega(n + p) / (omega(2) * omega(n) * omega(p - 1))


@dataclass(frozen=True)
class AsymParams:
    """Exponent ``p >= 1`` and asymmetry weight ``eps`` in ``[0, 1]``."""

    p: float
    eps: float = 0.5

    def __post_init__(self):
        p, eps = float(self.p), float(self.eps)
        if not np.isfinite(p) or p < 1:
            raise ValueError(f"p must be a finite real >= 1, got {self.p}")
        if not 0.0 <= eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "eps", eps)

    def bracket(self, t):
        """``(1-eps) max(t,0)^p + eps max(-t,0)^p`` elementwise."""
        t = np.asarray(t, float)
        p, eps = self.p, self.eps
        pos = np.maximum(t, 0.0)
        neg = np.maximum(-t, 0.0)
        if p == 2.0:
            pos, neg = pos * pos, neg * neg
        elif p != 1.0:
            pos, neg = pos**p, neg**p
        if eps == 0.0:
            return pos
        if eps == 1.0:
            return neg
        return (1.0 - eps) * pos + eps * neg


def asym_bracket(y, z, prm):
    """``<y, z>_eps^p`` for vectors (broadcast over leading axes)."""
    return prm.bracket(np.sum(np.asarray(y, float) * np.asarray(z, float), axis=-1))


def bracket_moments(directions, points, masses, prm):
    """``sum_k masses_k <u, points_k>_eps^p`` for each row ``u`` of ``directions``."""
    U = np.atleast_2d(np.asarray(directions, float))
    out = np.empty(U.shape[0])
    rows = max(1, _CHUNK // max(1, points.shape[0]))
    for lo in range(0, U.shape[0], rows):
        out[lo:lo + rows] = prm.bracket(U[lo:lo + rows] @ points.T) @ masses
    return out


class MomentBody(SupportBody):
    """Convex body with ``h(y)^p = sum_k m_k <y, z_k>_eps^p``.

    ``source`` records what the body was built from (a density or a body) and
    ``prm`` the bracket parameters. Support values on sphere grids are cached
    per grid, since polar volumes and centroids reuse them.
    """

    def __init__(self, points, masses, prm, source=None, label="moment_body"):
        self.points = np.asarray(points, float)
        self.masses = np.asarray(masses, float)
        if np.any(self.masses < 0) or not np.all(np.isfinite(self.masses)):
            raise ValueError("moment masses must be finite and nonnegative")
        self.prm = prm
        self.source = source
        self._grid_cache = {}
        super().__init__(self.points.shape[1], self._support_unit, label)

    def _support_unit(self, u):
        u = np.asarray(u, float)
        shape = u.shape[:-1]
        hp = bracket_moments(u.reshape(-1, self.n), self.points, self.masses, self.prm)
        return np.maximum(hp, 0.0).reshape(shape) ** (1.0 / self.prm.p)

    def support_on(self, grid):
        """Support values at the nodes of ``grid`` (cached)."""
        key = id(grid)
        hit = self._grid_cache.get(key)
        if hit is None or hit[0] is not grid:
            hit = (grid, self._support_unit(grid.nodes))
            self._grid_cache[key] = hit
        return hit[1]

    def support(self, y, grid=None):
        if grid is not None and y is grid.nodes:
            return self.support_on(grid)
        return super().support(y)

    def translate(self, s):
        return SupportBody.translate(self, s)


def moment_support_f(f, prm, y, settings=None):
    """``h(M_{eps,p} f, y) = (int f(z) <y,z>_eps^p dz)^{1/p}``; homogeneous in ``y``."""
    y = np.asarray(y, float)
    c = f.cloud(settings)
    hp = bracket_moments(y.reshape(-1, f.n), c.points, c.masses, prm)
    return (np.maximum(hp, 0.0) ** (1.0 / prm.p)).reshape(y.shape[:-1])


def moment_body_f(f, prm, settings=None):
    """``M_{eps,p} f`` built on the quadrature cloud of ``f``."""
    c = f.cloud(settings)
    return MomentBody(c.points, c.masses, prm, source=f, label=f"M({f.label})")


def moment_body_from_radial(grid, radial_values, prm, source=None, label="moment_body"):
    """Moment body of the star body with radial values ``r`` on ``grid``.

    Uses ``h^p(y) = (1/(n+p)) int_S r(xi)^{n+p} <y, xi>_eps^p dxi``. Infinite
    radii (unbounded star sets) are rejected.
    """
    r = np.asarray(radial_values, float)
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise ValueError("radial values must be finite and positive")
    n = grid.n
    masses = grid.weights * r ** (n + prm.p) / (n + prm.p)
    return MomentBody(grid.nodes, masses, prm, source=source, label=label)


def moment_body_K(K, prm, grid=None, settings=None):
    """``M_{eps,p} K`` of a star body (origin interior) via polar coordinates."""
    grid = grid if grid is not None else (settings or QuadratureSettings()).grid(K.n)
    r = K.radial(grid.nodes, grid=grid)
    return moment_body_from_radial(grid, r, prm, source=K, label=f"M({getattr(K, 'label', '')})")


def centroid_support(K, p, y, grid=None):
    """Support of the L_p centroid body ``Gamma_p K`` at ``y``."""
    body = centroid_body(K, p, grid)
    return body.support(np.asarray(y, float))


def centroid_body(K, p, grid=None):
    """``Gamma_p K``: symmetric moment body rescaled by ``2 / (c_{n,p} vol K)``.

    ``|t|^p = 2 <t>_{1/2}^p`` turns the symmetric bracket into the absolute
    power used in the centroid body's definition.
    """
    grid = grid if grid is not None else sphere_grid(K.n, resolve_settings(None, K.n).sphere_resolution)
    prm = AsymParams(p, 0.5)
    M = moment_body_K(K, prm, grid)
    vol = volume(K, grid)
    scale = 2.0 / (constant_c(K.n, p) * vol)
    return MomentBody(M.points, M.masses * scale, prm, source=K, label=f"Γ_{p:g}({getattr(K, 'label', '')})")


def polar_volume_from_support(grid, h):
    """``(1/n) int_S h^{-n}``, or ``inf`` if any support value is not positive."""
    h = np.asarray(h, float)
    if np.any(h <= 0):
        return np.inf
    return float(integrate_sphere(grid, h ** (-grid.n))) / grid.n


def polar_moment_volume(f, prm, settings=None):
    """``vol(M°_{eps,p} f) = (1/n) int_S h(M_{eps,p} f, xi)^{-n} dxi`` (``inf`` if unbounded)."""
    grid = (settings or QuadratureSettings()).grid(f.n)
    M = moment_body_f(f, prm, settings)
    return polar_volume_from_support(grid, M.support_on(grid))


def double_polar_moment_body(f, prm, settings=None):
    """``M_{eps,p} M°_{eps,p} f``, whose polar is ``M° M° f``.

    Its support function is the gauge of ``M° M° f``.
    """
    grid = (settings or QuadratureSettings()).grid(f.n)
    h = moment_body_f(f, prm, settings).support_on(grid)
    if np.any(h <= 0):
        raise ValueError("M° f is unbounded: moment support vanishes in some direction")
    return moment_body_from_radial(grid, 1.0 / h, prm, source=f, label=f"MM°({f.label})")


def polar_star(body, grid):
    """Polar of a support body sampled on ``grid`` as a :class:`StarBody` (linear interpolation)."""
    h = body.support(grid.nodes, grid=grid)
    if np.any(h <= 0):
        raise ValueError("polar body is unbounded")
    return StarBody.from_samples(grid.nodes, 1.0 / h)
