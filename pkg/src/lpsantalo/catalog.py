"""Built-in densities: indicators of bodies and extremal-profile functions.

Each builder returns a :class:`~lpsantalo.quadrature.Density` carrying a star
support description, so that its quadrature cloud is laid out in polar
coordinates and indicator discontinuities fall on the cloud's boundary.
"""

from __future__ import annotations

import numpy as np

from .bodies import Ellipsoid, Polytope, StarBody, SupportBody, ball
from .quadrature import Density, StarSupport, sphere_grid


def p_lambda(lam, p, s):
    """Extremal profile: ``(1+|s|^p)^{1/(lam-1)}``, ``(1-|s|^p)_+^{1/(lam-1)}`` or ``chi_[-1,1]``."""
    lam = float(lam)
    _check_lambda(lam)
    s = np.abs(np.asarray(s, float))
    if np.isinf(lam):
        return (s <= 1.0).astype(float)
    if lam < 1:
        return (1.0 + s**p) ** (1.0 / (lam - 1.0))
    base = np.maximum(1.0 - s**p, 0.0)
    return base ** (1.0 / (lam - 1.0))


def _check_lambda(lam):
    if np.isnan(lam) or lam <= 0 or lam == 1.0:
        raise ValueError(f"lambda must be positive and different from 1, got {lam}")


def _body_frame(K):
    """(center, radial function about the center, break angles or None)."""
    if isinstance(K, Ellipsoid):
        B = K.matrix
        return K.center, (lambda u: 1.0 / np.linalg.norm(np.asarray(u) @ B.T, axis=-1)), None
    if isinstance(K, Polytope):
        c = K.centroid
        Kc = K.translate(-c)
        breaks = Kc.vertex_angles if K.n == 2 else None
        return c, Kc.radial, breaks
    if isinstance(K, StarBody):
        return K.center, K.radial_fn, None
    if isinstance(K, SupportBody):
        grid = sphere_grid(K.n, 1024 if K.n == 2 else 48)
        return np.zeros(K.n), (lambda u: K.radial(u, grid=grid)), None
    raise TypeError(f"unsupported body type {type(K).__name__}")


def _bounding_box(center, radial, n):
    g = sphere_grid(n, 2048 if n == 2 else 64)
    pts = center + np.asarray(radial(g.nodes))[:, None] * g.nodes
    pad = 1e-3 * np.max(np.ptp(pts, axis=0))
    return pts.min(axis=0) - pad, pts.max(axis=0) + pad


def indicator(K, label=None):
    """``chi_K`` for an ellipsoid, polytope or star body."""
    c, radial, breaks = _body_frame(K)
    c = np.asarray(c, float)
    if isinstance(K, (Ellipsoid, Polytope)):
        contains = K.contains
    else:
        def contains(x):
            v = np.asarray(x, float) - c
            nrm = np.linalg.norm(v, axis=-1)
            u = v / np.where(nrm > 0, nrm, 1.0)[..., None]
            return nrm <= radial(u)

    def func(x):
        return contains(x).astype(float)

    star = StarSupport(c, radial, None, breaks)
    return Density(K.n, func, _bounding_box(c, radial, K.n), 1.0, star=star,
                   label=label or f"chi_{getattr(K, 'label', 'K')}")


def profile(K, lam, p, b=1.0, amplitude=1.0, label=None):
    """``amplitude * p_lam(b * g(K, x))`` for a body with the origin in its interior.

    For ``lam >= 1`` (including ``inf``) the support is ``K / b``; for
    ``lam < 1`` the support is all of R^n and the radial quadrature uses
    ``t = L s / (1 - s)`` with ``L = r_K / b``.
    """
    lam = float(lam)
    _check_lambda(lam)
    if isinstance(K, Polytope):
        radial, breaks = K.radial, (K.vertex_angles if K.n == 2 else None)
        if not K.origin_interior:
            raise ValueError("profile needs the origin inside the body")
    elif isinstance(K, StarBody):
        if K.centered:
            radial, breaks = K.radial_fn, None
        else:
            radial, breaks = K.radial, None
    else:
        radial, breaks = (lambda u: K.radial(u)), None
    n = K.n

    def func(x):
        x = np.asarray(x, float)
        nrm = np.linalg.norm(x, axis=-1)
        u = x / np.where(nrm > 0, nrm, 1.0)[..., None]
        gval = np.where(nrm > 0, nrm / np.where(nrm > 0, radial(u), 1.0), 0.0)
        return p_lambda(lam, p, b * gval)

    def extent_scaled(u):
        return np.asarray(radial(u), float) / b

    if lam < 1:
        star = StarSupport(np.zeros(n), lambda u: np.full(np.shape(u)[:-1], np.inf), extent_scaled, breaks)
        box = None
    else:
        star = StarSupport(np.zeros(n), extent_scaled, None, breaks)
        box = _bounding_box(np.zeros(n), extent_scaled, n)
    return Density(n, func, box, float(amplitude), star=star, amplitude=float(amplitude),
                   label=label or f"p_{lam:g}(g_{getattr(K, 'label', 'K')})")


def ball_profile(n, lam, p, matrix=None, center=None, amplitude=1.0):
    """``amplitude * p_lam(|B (x - center)|)``."""
    B = np.eye(n) if matrix is None else np.asarray(matrix, float)
    f = profile(ball(n), lam, p, amplitude=amplitude, label=f"p_{float(lam):g}(|Bx|)")
    f = f.linear_image(np.linalg.inv(B))
    if center is not None:
        f = f.translate(center)
    return f


def perturbed(f, a=0.3, w=None, phase=0.0):
    """``f(x) (1 + a sin(<w, x> + phase))`` with ``|a| < 1``; keeps the support of ``f``."""
    if not abs(a) < 1:
        raise ValueError("perturbation amplitude must satisfy |a| < 1")
    w = np.eye(f.n)[0] if w is None else np.asarray(w, float)
    base = f

    def func(x):
        x = np.asarray(x, float)
        return base(x) / base.amplitude * (1.0 + a * np.sin(x @ w + phase))

    return Density(f.n, func, f.box, f.sup_bound * (1 + abs(a)), star=_translated_star(f),
                   amplitude=f.amplitude, label=f"{f.label}*(1+{a:g}sin)")


def tilted(f, w):
    """``f(x) exp(<w, x - x0>)`` with ``x0`` the star center: an asymmetric reweighting."""
    w = np.asarray(w, float)
    star = _translated_star(f)
    x0 = np.asarray(star.center, float) if star is not None else np.zeros(f.n)
    base = f
    if f.bounded:
        lo, hi = f.box
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(f.n, -1).T
        bound = f.sup_bound * float(np.exp(np.max((corners - x0) @ w)))
    else:
        raise ValueError("tilting needs a bounded support")

    def func(x):
        x = np.asarray(x, float)
        return base(x) / base.amplitude * np.exp((x - x0) @ w)

    return Density(f.n, func, f.box, bound, star=star, amplitude=f.amplitude, label=f"{f.label}*exp")


def _translated_star(f):
    if f.star is None:
        return None
    return f.star.shifted(f.offset)


def random_asymmetric_density(rng, n=2, lam=None, p=2.0):
    """Asymmetric density: a tilted extremal profile of a random non-symmetric body."""
    from .bodies import random_polygon, random_polytope

    K = random_polygon(rng, vertices=int(rng.integers(5, 9))) if n == 2 else random_polytope(rng, n, 12)
    lam = float(rng.choice([1.5, 2.0, 3.0, np.inf])) if lam is None else lam
    f = profile(K, lam, p)
    return tilted(f, rng.uniform(-0.8, 0.8, n))
