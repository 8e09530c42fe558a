"""Brute-force reference estimators.

These share no discretization with the quadrature code: integrals are plain
Monte-Carlo averages over the support box, polar volumes are hit rates of a
membership test, and the Santaló point is an exhaustive grid search of an
exactly computed polar area. They are slow and noisy but independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .bodies import Polytope, unit_ball_volume

SHARD = 1 << 17


@dataclass(frozen=True)
class McEstimate:
    """Monte-Carlo value with its standard error (arrays for vector integrands)."""

    value: float | np.ndarray
    stderr: float | np.ndarray
    samples: int
    seed: int
    inconclusive: bool = False

    def agrees(self, reference, k=3.0):
        """``|value - reference| <= k * stderr`` (componentwise)."""
        return bool(np.all(np.abs(np.asarray(self.value) - np.asarray(reference)) <= k * np.asarray(self.stderr)))


class _Moments:
    """Streaming mean/variance merged across shards (Chan et al.)."""

    def __init__(self):
        self.count, self.mean, self.m2 = 0, 0.0, 0.0

    def add(self, x):
        x = np.asarray(x, float)
        nb = x.shape[0]
        mb = x.mean(axis=0)
        m2b = ((x - mb) ** 2).sum(axis=0)
        if self.count == 0:
            self.count, self.mean, self.m2 = nb, mb, m2b
            return
        n = self.count + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * nb / n
        self.m2 = self.m2 + m2b + delta**2 * self.count * nb / n
        self.count = n

    def result(self):
        var = self.m2 / max(self.count - 1, 1)
        return self.mean, np.sqrt(var / self.count)


def _shards(samples, seed):
    ss = np.random.SeedSequence(seed)
    k = -(-samples // SHARD)
    sizes = [SHARD] * (k - 1) + [samples - SHARD * (k - 1)]
    return [(np.random.Generator(np.random.PCG64(child)), m) for child, m in zip(ss.spawn(k), sizes)]


def mc_integral(f, kernel=None, samples=10**6, seed=0):
    """Estimate ``int f * kernel`` by uniform sampling of the support box."""
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    if not f.bounded:
        raise ValueError("Monte-Carlo integration needs a bounded support box")
    lo, hi = f.box
    box_vol = float(np.prod(hi - lo))
    acc = _Moments()
    for rng, m in _shards(samples, seed):
        x = lo + (hi - lo) * rng.random((m, f.n))
        v = np.asarray(f(x), float)
        if kernel is not None:
            k = np.asarray(kernel(x), float)
            v = v[:, None] * k if k.ndim == 2 else v * k
        acc.add(box_vol * v)
    mean, se = acc.result()
    if np.ndim(mean) == 0:
        mean, se = float(mean), float(se)
    return McEstimate(mean, se, samples, seed)


def mc_polar_volume(h, n, samples=10**6, seed=0, directions=4096):
    """Estimate ``vol(K°) = vol{x : h_K(x) <= 1}`` by rejection sampling in a ball.

    ``h`` is the support function of ``K`` on unit vectors (``(..., n)`` to
    ``(...)``). The bounding radius is ``1.05 / min h`` over a dense direction
    set. A zero hit rate is reported as inconclusive.
    """
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    rng0 = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    u = rng0.standard_normal((directions, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    hu = np.asarray(h(u), float)
    if np.any(hu <= 0):
        raise ValueError("support function must be positive (origin interior)")
    rho = 1.05 / float(hu.min())
    ball_vol = unit_ball_volume(n) * rho**n
    acc = _Moments()
    hits = 0
    for rng, m in _shards(samples, seed + 1):
        g = rng.standard_normal((m, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rho * rng.random(m) ** (1.0 / n)
        inside = r * np.asarray(h(g), float) <= 1.0
        hits += int(inside.sum())
        acc.add(ball_vol * inside)
    mean, se = acc.result()
    return McEstimate(float(mean), float(se), samples, seed, inconclusive=hits == 0)


def _polar_area_2d(normals, offsets, points):
    """Exact area of ``(K - s)°`` for the polygon ``{<a_e, x> <= b_e}`` at each ``s``."""
    theta = np.arctan2(normals[:, 1], normals[:, 0])
    order = np.argsort(theta)
    a, b, theta = normals[order], offsets[order], theta[order]
    na = np.linalg.norm(a, axis=1)
    a, b = a / na[:, None], b / na
    dtheta = np.diff(np.append(theta, theta[0] + 2 * np.pi))
    out = np.empty(points.shape[0])
    rows = max(1, (1 << 22) // len(b))
    for lo in range(0, points.shape[0], rows):
        d = b[None, :] - points[lo:lo + rows] @ a.T
        bad = np.any(d <= 0, axis=1)
        d = np.where(d > 0, d, 1.0)
        area = 0.5 * np.sum(np.sin(dtheta) / (d * np.roll(d, -1, axis=1)), axis=1)
        out[lo:lo + rows] = np.where(bad, np.inf, area)
    return out


def _halfspaces(K, n, directions):
    if isinstance(K, Polytope):
        return K.normals, K.offsets
    if n == 2:
        t = 2 * np.pi * np.arange(directions) / directions
        u = np.column_stack([np.cos(t), np.sin(t)])
    else:
        i = np.arange(directions) + 0.5
        z = 1 - 2 * i / directions
        phi = np.pi * (1 + 5**0.5) * i
        s = np.sqrt(1 - z**2)
        u = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    return u, np.asarray(K.support(u), float)


def grid_minimize_polar(K, grid_step, directions=2048, return_value=False):
    """Argmin of ``vol((K - s)°)`` over an interior grid of spacing ``grid_step``.

    ``K`` is replaced by the circumscribed polytope cut out by its supporting
    half-spaces in ``directions`` directions (a polytope is used as is). In the
    plane the polar area is the exact shoelace area of the dual polygon; in
    space the convex hull of the dual vertices is measured.
    """
    n = K.n
    a, b = _halfspaces(K, n, directions if n == 2 else min(directions, 600))
    E = np.eye(n)
    hi = np.asarray(K.support(E), float)
    lo = -np.asarray(K.support(-E), float)
    axes = [np.arange(l + grid_step / 2, h, grid_step) for l, h in zip(lo, hi)]
    pts = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
    if n == 2:
        vals = _polar_area_2d(a, b, pts)
    else:
        vals = np.full(pts.shape[0], np.inf)
        for i, s in enumerate(pts):
            d = b - a @ s
            if np.all(d > 0):
                vals[i] = ConvexHull(a / d[:, None]).volume
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        raise ValueError("grid has no interior point; decrease grid_step")
    return (pts[i], float(vals[i])) if return_value else pts[i]
