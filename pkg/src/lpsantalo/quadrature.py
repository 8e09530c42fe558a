"""Quadrature on the unit sphere and for compactly supported densities.

Everything else in the package reduces to two primitives defined here:

* sums over a :class:`DirectionGrid` (nodes and surface weights on
  ``S^{n-1}``), and
* sums over a :class:`Cloud`, a point/weight rule that integrates a
  :class:`Density` against arbitrary kernels.

A density is always evaluated pointwise. When it carries a
:class:`StarSupport` (its support is star-shaped about a known point with a
known radial extent), the cloud is built in polar coordinates about that
point, which integrates indicators of smooth bodies to quadrature accuracy
instead of the first-order accuracy of a box rule. Otherwise a composite
tensor Gauss-Legendre rule over ``support_box`` is used.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import optimize

SUPPORTED_DIMENSIONS = (2, 3)
SPHERE_AREA = {2: 2.0 * np.pi, 3: 4.0 * np.pi}


class IntegrationError(ArithmeticError):
    """A quadrature sum met a non-finite integrand value."""

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


def _check_dimension(n):
    if n not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"unsupported dimension n={n}; only n in {SUPPORTED_DIMENSIONS}")


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# directions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    """Quadrature nodes and surface weights on ``S^{n-1}``.

    For ``n = 2`` the nodes are ``resolution`` equally spaced angles. For
    ``n = 3`` they form a product of ``resolution`` Gauss-Legendre nodes in
    ``cos(theta)`` with ``2*resolution`` equally spaced azimuths. Both grids
    are invariant under ``xi -> -xi``.
    """

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    resolution: int
    exactness_degree: int
    angles: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", _readonly(self.nodes))
        object.__setattr__(self, "weights", _readonly(self.weights))
        if self.angles is not None:
            object.__setattr__(self, "angles", _readonly(self.angles))
        norms = np.linalg.norm(self.nodes, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValueError("grid nodes must be unit vectors")
        if np.any(self.weights <= 0):
            raise ValueError("grid weights must be positive")
        if abs(self.weights.sum() - SPHERE_AREA[self.n]) > 1e-10:
            raise ValueError("grid weights must sum to the area of the sphere")

    @property
    def size(self):
        return self.nodes.shape[0]

    @property
    def spacing(self):
        """Typical angular distance between neighbouring nodes."""
        if self.n == 2:
            return 2.0 * np.pi / self.size
        return np.pi / self.resolution

    def metadata(self):
        return {
            "n": self.n,
            "resolution": self.resolution,
            "nodes": int(self.size),
            "exactness_degree": int(self.exactness_degree),
        }


_GRID_CACHE: dict[tuple[int, int], DirectionGrid] = {}


def sphere_grid(n, resolution):
    """Return the product/uniform direction grid of the given resolution.

    Grids are immutable, so repeated requests share one cached instance.
    """
    _check_dimension(n)
    resolution = int(resolution)
    if resolution < 16:
        raise ValueError(f"resolution must be at least 16, got {resolution}")
    key = (n, resolution)
    if key in _GRID_CACHE:
        return _GRID_CACHE[key]
    if n == 2:
        if resolution % 2:
            raise ValueError("circle resolution must be even (antipodal symmetry)")
        theta = 2.0 * np.pi * np.arange(resolution) / resolution
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(resolution, 2.0 * np.pi / resolution)
        grid = DirectionGrid(2, nodes, weights, resolution, resolution - 1, angles=theta)
    else:
        z, wz = leggauss(resolution)
        m = 2 * resolution
        phi = 2.0 * np.pi * np.arange(m) / m
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1.0 - zz**2)
        nodes = np.column_stack([(s * np.cos(pp)).ravel(), (s * np.sin(pp)).ravel(), zz.ravel()])
        nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
        weights = np.repeat(wz, m) * (2.0 * np.pi / m)
        grid = DirectionGrid(3, nodes, weights, resolution, 2 * resolution - 1)
    _GRID_CACHE[key] = grid
    return grid


def integrate_sphere(grid, phi):
    """Return ``sum_i w_i phi(xi_i)``.

    ``phi`` is either a callable evaluated on ``grid.nodes`` (shape ``(N, n)``)
    or an array of node values. Vector-valued integrands of shape ``(N, k)``
    are integrated componentwise.
    """
    values = np.asarray(phi(grid.nodes) if callable(phi) else phi, dtype=float)
    if values.shape[0] != grid.size:
        raise ValueError("integrand does not match the grid size")
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.argwhere(bad)[0][0])
        raise IntegrationError(
            f"non-finite integrand at direction {grid.nodes[idx].tolist()}",
            direction=grid.nodes[idx].copy(),
        )
    return np.tensordot(grid.weights, values, axes=(0, 0))


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSettings:
    """Discretization knobs shared by every integral in a computation.

    ``None`` entries resolve to dimension-dependent defaults, see
    :func:`resolve_settings`.
    """

    sphere_resolution: int | None = None
    density_angles: int | None = None
    radial_nodes: int = 48
    subdivisions: int | None = None
    box_order: int = 4

    def grid(self, n):
        return sphere_grid(n, resolve_settings(self, n).sphere_resolution)

    def metadata(self, n):
        s = resolve_settings(self, n)
        return {
            "sphere_resolution": s.sphere_resolution,
            "sphere_nodes": int(sphere_grid(n, s.sphere_resolution).size),
            "density_angles": s.density_angles,
            "radial_nodes": s.radial_nodes,
            "subdivisions": s.subdivisions,
        }


_DEFAULTS = {
    2: dict(sphere_resolution=1024, density_angles=512, subdivisions=128),
    3: dict(sphere_resolution=48, density_angles=16, subdivisions=32),
}


def resolve_settings(settings, n):
    settings = settings or QuadratureSettings()
    _check_dimension(n)
    filled = {k: v for k, v in _DEFAULTS[n].items() if getattr(settings, k) is None}
    return dataclasses.replace(settings, **filled) if filled else settings


@dataclass(frozen=True)
class StarSupport:
    """Polar description of a density's support.

    The support is ``{center + t*u : 0 <= t <= extent(u)}``. ``extent`` may
    return ``inf`` for densities with unbounded support, in which case
    ``scale(u)`` gives the length used to map ``[0, inf)`` onto ``[0, 1)``.
    ``breaks`` (n = 2 only) are angles where ``extent`` is not smooth, such as
    polygon vertices; the angular rule is split there.
    """

    center: np.ndarray
    extent: Callable[[np.ndarray], np.ndarray]
    scale: Callable[[np.ndarray], np.ndarray] | None = None
    breaks: np.ndarray | None = None

    def shifted(self, v):
        return dataclasses.replace(self, center=np.asarray(self.center, float) + v)


@dataclass(frozen=True)
class Cloud:
    """Point/weight rule for one density: ``int f k ~ sum(weights*values*k(points))``."""

    points: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    @property
    def masses(self):
        return self.weights * self.values

    def shifted(self, v):
        return Cloud(self.points + v, self.weights, self.values)

    def scaled(self, a):
        return Cloud(self.points, self.weights, self.values * a)


@dataclass(frozen=True, eq=False)
class Density:
    """A nonnegative function on R^n, evaluated pointwise.

    ``func`` maps an array of points ``(..., n)`` to values ``(...)``. The
    function actually represented is ``amplitude * func(x - offset)``; the
    offset and amplitude are kept separate so that translates and rescaled
    copies reuse the quadrature cloud of the original.

    ``support_box`` is ``(lo, hi)`` for the untranslated function, or ``None``
    when the support is unbounded (only allowed together with ``star``).
    """

    n: int
    func: Callable[[np.ndarray], np.ndarray]
    support_box: tuple[np.ndarray, np.ndarray] | None
    sup_bound: float
    star: StarSupport | None = None
    offset: np.ndarray | None = None
    amplitude: float = 1.0
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        _check_dimension(self.n)
        off = np.zeros(self.n) if self.offset is None else np.asarray(self.offset, float)
        object.__setattr__(self, "offset", off)
        if self.support_box is None:
            if self.star is None:
                raise ValueError("a density without support box needs a star support")
        else:
            lo, hi = (np.asarray(b, float) for b in self.support_box)
            if lo.shape != (self.n,) or hi.shape != (self.n,):
                raise ValueError("support box corners must have shape (n,)")
            object.__setattr__(self, "support_box", (lo, hi))
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")

    def __call__(self, x):
        x = np.asarray(x, float)
        return self.amplitude * np.asarray(self.func(x - self.offset), float)

    @property
    def box(self):
        """Support box of the represented (translated) function, or None."""
        if self.support_box is None:
            return None
        lo, hi = self.support_box
        return lo + self.offset, hi + self.offset

    @property
    def bounded(self):
        return self.support_box is not None

    def translate(self, v):
        """Return ``x -> f(x - v)``."""
        return dataclasses.replace(self, offset=self.offset + np.asarray(v, float))

    def scale(self, a):
        """Return ``a * f``."""
        return dataclasses.replace(self, amplitude=self.amplitude * float(a))

    def linear_image(self, A):
        """Return ``x -> f(A^{-1} x)``, pushing the support forward by ``A``.

        The result is a fresh density (its cloud is rebuilt).
        """
        A = np.asarray(A, float)
        Ainv = np.linalg.inv(A)
        base = self

        def func(x):
            return base(x @ Ainv.T) / base.amplitude

        box = None
        if self.bounded:
            lo, hi = self.box
            corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(self.n, -1).T
            img = corners @ A.T
            box = (img.min(axis=0), img.max(axis=0))
        star = None
        if self.star is not None:
            star = _linear_star(self.star, self.offset, A)
        return Density(
            self.n, func, box, self.sup_bound, star=star, amplitude=self.amplitude,
            label=f"{self.label}∘A^-1" if self.label else "",
        )

    def cloud(self, settings=None):
        """Quadrature cloud for this density (cached per settings)."""
        s = resolve_settings(settings, self.n)
        key = (s.density_angles, s.radial_nodes, s.subdivisions, s.box_order)
        base = self._cache.get(key)
        if base is None:
            base = _build_cloud(self, s)
            self._cache[key] = base
        c = base
        if np.any(self.offset):
            c = c.shifted(self.offset)
        if self.amplitude != 1.0:
            c = c.scaled(self.amplitude)
        return c


def _linear_star(star, offset, A):
    Ainv = np.linalg.inv(A)
    extent, scale = star.extent, star.scale

    def pull(u):
        v = u @ Ainv.T
        norm = np.linalg.norm(v, axis=-1)
        return v / norm[..., None], norm

    def new_extent(u):
        v, norm = pull(u)
        return extent(v) / norm

    def new_scale(u):
        v, norm = pull(u)
        return scale(v) / norm

    breaks = None
    if star.breaks is not None:
        b = np.column_stack([np.cos(star.breaks), np.sin(star.breaks)]) @ A.T
        breaks = np.mod(np.arctan2(b[:, 1], b[:, 0]), 2 * np.pi)
    return StarSupport(A @ (np.asarray(star.center, float) + offset), new_extent,
                       None if scale is None else new_scale, breaks)


def _angular_rule(n, star, s):
    """Directions and weights for the polar cloud."""
    if n == 2 and star.breaks is not None and len(star.breaks) > 0:
        b = np.sort(np.mod(np.asarray(star.breaks, float), 2 * np.pi))
        edges = np.append(b, b[0] + 2 * np.pi)
        lengths = np.diff(edges)
        keep = lengths > 1e-14
        edges_lo, lengths = edges[:-1][keep], lengths[keep]
        thetas, weights = [], []
        for lo, ln in zip(edges_lo, lengths):
            m = max(8, int(round(s.density_angles * ln / (2 * np.pi))))
            x, w = leggauss(m)
            thetas.append(lo + 0.5 * ln * (x + 1))
            weights.append(0.5 * ln * w)
        theta = np.concatenate(thetas)
        return np.column_stack([np.cos(theta), np.sin(theta)]), np.concatenate(weights)
    g = sphere_grid(n, s.density_angles)
    return g.nodes, g.weights


def _build_cloud(f, s):
    n = f.n
    if f.star is not None:
        star = f.star
        dirs, wdir = _angular_rule(n, star, s)
        x, w = leggauss(s.radial_nodes)
        u = 0.5 * (x + 1.0)
        wu = 0.5 * w
        ext = np.asarray(star.extent(dirs), float)
        finite = np.isfinite(ext)
        t = np.empty((dirs.shape[0], u.size))
        jac = np.empty_like(t)
        t[finite] = ext[finite, None] * u
        jac[finite] = ext[finite, None] * wu
        if not finite.all():
            if star.scale is None:
                raise ValueError("unbounded star support needs a scale function")
            L = np.asarray(star.scale(dirs[~finite]), float)[:, None]
            t[~finite] = L * u / (1.0 - u)
            jac[~finite] = L * wu / (1.0 - u) ** 2
        weights = wdir[:, None] * jac * t ** (n - 1)
        pts = np.asarray(star.center, float) + t[..., None] * dirs[:, None, :]
        pts = pts.reshape(-1, n)
        weights = weights.ravel()
    else:
        lo, hi = f.support_box
        if np.any(hi - lo <= 0):
            raise ValueError("degenerate support box (zero volume)")
        x, w = leggauss(s.box_order)
        axes, axw = [], []
        for k in range(n):
            h = (hi[k] - lo[k]) / s.subdivisions
            left = lo[k] + h * np.arange(s.subdivisions)
            axes.append((left[:, None] + 0.5 * h * (x + 1)).ravel())
            axw.append(np.tile(0.5 * h * w, s.subdivisions))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        wm = np.meshgrid(*axw, indexing="ij")
        weights = np.prod([m.ravel() for m in wm], axis=0)
    values = np.asarray(f.func(pts), float)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError("density must be finite and nonnegative")
    keep = values > 0
    if not keep.any():
        raise ValueError("density vanishes on every quadrature point")
    return Cloud(pts[keep], weights[keep], values[keep])


def integrate_density(f, kernel=None, subdivisions=None, settings=None):
    """Integrate ``f * kernel`` over R^n with the density's cloud.

    ``kernel`` maps points ``(K, n)`` to ``(K,)`` or ``(K, m)``; ``None``
    means the constant 1. ``subdivisions`` overrides the box-rule refinement.
    """
    if subdivisions is not None:
        settings = dataclasses.replace(settings or QuadratureSettings(), subdivisions=int(subdivisions))
    c = f.cloud(settings)
    if kernel is None:
        return float(c.masses.sum())
    k = np.asarray(kernel(c.points), float)
    return np.tensordot(c.masses, k, axes=(0, 0))


def lp_integral(f, lam, p=None, settings=None):
    """Return ``(int f^lam)^(1/lam)``, or the supremum of ``f`` for ``lam = inf``.

    For ``lam < 1`` this is not a norm but is defined by the same formula.
    When ``p`` is given the admissible range ``lam > n/(n+p)`` is enforced.
    """
    lam = float(lam)
    if lam == 1.0 or lam <= 0 or np.isnan(lam):
        raise ValueError(f"lambda must be positive and different from 1, got {lam}")
    if p is not None and lam <= f.n / (f.n + p):
        raise ValueError(f"lambda must exceed n/(n+p) = {f.n / (f.n + p):.6g}, got {lam}")
    if np.isinf(lam):
        return sup_norm(f, settings)
    c = f.cloud(settings)
    return float(np.sum(c.weights * c.values**lam)) ** (1.0 / lam)


def sup_norm(f, settings=None, starts=5):
    """Max of ``f`` over the cloud, polished by Nelder-Mead from the best nodes."""
    c = f.cloud(settings)
    order = np.argsort(c.values)[::-1][:starts]
    best = float(c.values[order[0]])
    box = f.box
    bounds = None if box is None else list(zip(*box))
    for i in order:
        res = optimize.minimize(
            lambda x: -float(f(np.asarray(x)[None, :])[0]),
            c.points[i], method="Nelder-Mead", bounds=bounds,
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400},
        )
        best = max(best, -float(res.fun))
    return best
