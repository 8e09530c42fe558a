"""Sharp constants and left/right-hand-side evaluators.

Every evaluator returns an :class:`IneqReport` holding both sides of an
inequality of the form ``lhs <= rhs`` and their ratio. Ratios are formed in
log space because the functional inequalities raise norms to large (and, for
``lambda < 1``, negative) powers.

Inequality identifiers:

========================  ====================================================
``bs``                    ``vol(K) vol(K°) <= omega_n^2`` (origin-symmetric K)
``bs_santalo``            same with ``K°`` replaced by ``(K - s)°``, ``s`` the Santaló point
``bs_centroid``           same with the center of mass
``region``                same at a user-given interior point (membership test)
``lp_bs``                 ``vol(K) vol(Gamma_p° K) <= omega_n^2``
``busemann_petty``        ``vol(K) <= vol(Gamma_p K)``
``hs_polar``              ``vol(K)^{n/p+1} vol((M_{eps,p} K - s)°) <= R_{n,p}``
``hs_volume``             ``r_{n,p} <= vol(K)^{-n/p-1} vol(M_{eps,p} K)``
``translate_min``         ``vol(K)^{n/p+1} min_s vol(M°_{0,p}(K - s)) <= R_{n,p}``
``hull_limit``            ``h(Gamma_p K, y)`` vs ``h(co(K ∪ -K), y)`` (diagnostic)
``moment``                moment inequality with constant ``a_{n,p,lambda}``
``functional_symmetric``  functional L_p Santaló inequality, ``|<x, xi>|^p`` bracket
``functional_asymmetric`` the same with ``<x, xi>_eps^p`` and the point ``c_{f,p}``
``renyi``                 two-function moment-entropy inequality, constant ``d``
========================  ====================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from . import santalo as _santalo
from .bodies import (
    Ellipsoid, Polytope, convex_hull_sym_support, polar_volume, unit_ball_volume, volume,
)
from .catalog import indicator, p_lambda
from .lp_bodies import (
    AsymParams, bracket_moments, centroid_body, constant_c, moment_body_f, moment_body_K, omega,
)
from .quadrature import QuadratureSettings, integrate_density, integrate_sphere, lp_integral

GEOMETRIC_IDS = (
    "bs", "bs_santalo", "bs_centroid", "region", "lp_bs", "busemann_petty",
    "hs_polar", "hs_volume", "translate_min", "hull_limit",
)
FUNCTIONAL_IDS = ("moment", "functional_symmetric", "functional_asymmetric", "renyi")
INEQUALITY_IDS = GEOMETRIC_IDS + FUNCTIONAL_IDS
DIAGNOSTIC_IDS = ("hull_limit",)

DEFAULT_TOL = 1e-3
RENYI_TOL = 1e-2


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


def check_lambda(n, p, lam):
    """Raise unless ``lam`` lies in ``(n/(n+p), 1) ∪ (1, inf]``."""
    lam = float(lam)
    lo = n / (n + p)
    if np.isnan(lam) or lam == 1.0 or lam <= lo:
        raise ValueError(
            f"lambda={lam:g} is not admissible: it must lie in ({lo:.6g}, 1) ∪ (1, inf] for n={n}, p={p:g}"
        )
    return lam


def dual_exponent(lam):
    """Hölder dual ``lam/(lam-1)``; 1 for ``lam = inf``."""
    lam = float(lam)
    return 1.0 if np.isinf(lam) else lam / (lam - 1.0)


def _log_beta(m, l):
    return gammaln(m) + gammaln(l) - gammaln(m + l)


def log_constant_a(n, p, lam):
    lam = check_lambda(n, p, lam)
    if np.isinf(lam):
        return -n * math.log(n / (n + p))
    ld = dual_exponent(lam)
    common = math.log(n / p) + (ld - 1.0) * math.log(n / (ld * p) + 1.0)
    if lam < 1:
        base = lam * p / ((1.0 - lam) * n) - 1.0
        inner = common + (n / p) * math.log(base) + _log_beta(n / p, -ld - n / p + 1.0)
    else:
        inner = common + (n / p) * math.log(ld * p / n + 1.0) + _log_beta(n / p, ld)
    return p * inner


def constant_a(n, p, lam):
    """Best constant of the moment inequality (three branches in ``lam``)."""
    return math.exp(log_constant_a(n, p, lam))


def _hs_core(n, p):
    return math.log(2.0) + gammaln(0.5 * (n + p + 2)) - gammaln(0.5 * (n + 2)) - gammaln(0.5 * (p + 1))


def log_constant_R(n, p):
    return ((n / (2 * p) + n) * math.log(math.pi) - 2 * gammaln(0.5 * (n + 2))
            + (n / p) * _hs_core(n, p))


def constant_R(n, p):
    """``vol(B)^{n/p+1} vol((M_{eps,p} B)°)``."""
    return math.exp(log_constant_R(n, p))


def constant_r(n, p):
    """``vol(B)^{-n/p-1} vol(M_{eps,p} B)``."""
    return math.exp(-(n / (2 * p)) * math.log(math.pi) - (n / p) * _hs_core(n, p))


def log_constant_b(n, p, lam):
    return (n * math.log(n / (n + p)) + log_constant_a(n, p, lam)
            + p * log_constant_R(n, p) + p * math.log(n))


def constant_b(n, p, lam):
    """``(n/(n+p))^n a R^p n^p``."""
    return math.exp(log_constant_b(n, p, lam))


def log_constant_d(n, p, lam):
    return log_constant_a(n, p, lam) + log_constant_b(n, p, lam) - p * math.log(n)


def constant_d(n, p, lam):
    """``a b n^{-p}``."""
    return math.exp(log_constant_d(n, p, lam))


@dataclass(frozen=True)
class Constants:
    n: int
    p: float
    lam: float
    lam_dual: float
    a: float
    b: float
    d: float
    R: float
    r: float
    c: float
    omega_n: float


def constants(n, p, lam=np.inf):
    lam = check_lambda(n, p, lam)
    return Constants(n, float(p), lam, dual_exponent(lam), constant_a(n, p, lam), constant_b(n, p, lam),
                     constant_d(n, p, lam), constant_R(n, p), constant_r(n, p), constant_c(n, p), omega(n))


def extremal_profile(lam, p, s):
    """The profile ``p_lambda(s)``."""
    return p_lambda(lam, p, s)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


@dataclass
class IneqReport:
    """One inequality evaluation ``lhs <= rhs``.

    ``ratio`` is ``lhs / rhs`` (``inf`` when the right-hand side degenerates to
    zero, which is then flagged by ``degenerate``). ``saturated`` means
    ``|ratio - 1| <= tol``.
    """

    ineq: str
    n: int
    lhs: float
    rhs: float
    ratio: float
    tol: float = DEFAULT_TOL
    p: float | None = None
    lam: float | None = None
    eps: float | None = None
    cfp: list | None = None
    grid: dict = field(default_factory=dict)
    degenerate: bool = False
    details: dict = field(default_factory=dict)

    @property
    def saturated(self):
        return bool(math.isfinite(self.ratio) and abs(self.ratio - 1.0) <= self.tol)

    @property
    def holds(self):
        """``ratio <= 1 + tol``; degenerate right-hand sides count as trivially satisfied."""
        if self.ineq in DIAGNOSTIC_IDS:
            return True
        return bool(self.degenerate or self.ratio <= 1.0 + self.tol)

    def to_json(self):
        return {
            "ineq": self.ineq,
            "n": int(self.n),
            "p": _json_float(self.p),
            "lambda": _json_float(self.lam),
            "eps": _json_float(self.eps),
            "lhs": _json_float(self.lhs),
            "rhs": _json_float(self.rhs),
            "ratio": _json_float(self.ratio),
            "saturated": self.saturated,
            "cfp": None if self.cfp is None else [float(v) for v in self.cfp],
            "grid": self.grid,
            "degenerate": bool(self.degenerate),
            "details": {k: _json_float(v) if isinstance(v, (float, np.floating)) else v
                        for k, v in self.details.items()},
        }


def _report_from_logs(ineq, n, log_lhs, log_rhs, **kw):
    ratio = math.exp(log_lhs - log_rhs) if math.isfinite(log_rhs) else math.inf
    return IneqReport(ineq, n, _safe_exp(log_lhs), _safe_exp(log_rhs), ratio, **kw)


def _safe_exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _grid_meta(n, settings):
    return (settings or QuadratureSettings()).metadata(n)


# ---------------------------------------------------------------------------
# functional inequalities
# ---------------------------------------------------------------------------


def _norms(f, lam, p, settings):
    l1 = integrate_density(f, settings=settings)
    ll = lp_integral(f, lam, p, settings)
    return l1, ll


def eval_moment_ineq(f, K, lam, p, settings=None, tol=DEFAULT_TOL):
    """``||f||_1^{n+p lam'} <= a (int f g_K^p)^n ||f||_lam^{p lam'} vol(K)^p``."""
    n = f.n
    lam = check_lambda(n, p, lam)
    ld = dual_exponent(lam)
    l1, ll = _norms(f, lam, p, settings)
    moment = float(integrate_density(f, lambda x: K.gauge(x) ** p, settings=settings))
    vol = volume(K)
    if moment <= 0 or vol <= 0:
        raise ValueError("degenerate body or density")
    log_lhs = (n + p * ld) * math.log(l1)
    log_rhs = log_constant_a(n, p, lam) + n * math.log(moment) + p * ld * math.log(ll) + p * math.log(vol)
    return _report_from_logs("moment", n, log_lhs, log_rhs, tol=tol, p=p, lam=lam, grid=_grid_meta(n, settings),
                             details={"gauge_moment": moment, "volume": vol, "l1": l1, "l_lambda": ll})


def _sphere_term(f, prm, settings, scale=1.0):
    """``int_S (scale * int f <x, xi>_eps^p dx)^{-n/p} dxi``; ``inf`` if some moment vanishes."""
    grid = (settings or QuadratureSettings()).grid(f.n)
    c = f.cloud(settings)
    mom = scale * bracket_moments(grid.nodes, c.points, c.masses, prm)
    if np.any(mom <= 0):
        return math.inf
    return float(integrate_sphere(grid, mom ** (-f.n / prm.p)))


def eval_bs_symmetric(f, lam, p, settings=None, tol=DEFAULT_TOL):
    """``||f||_1^{n+lam'p} <= 2^{-n} b ||f||_lam^{lam'p} (int_S (int f |<x,xi>|^p)^{-n/p})^{-p}``."""
    n = f.n
    lam = check_lambda(n, p, lam)
    ld = dual_exponent(lam)
    l1, ll = _norms(f, lam, p, settings)
    S = _sphere_term(f, AsymParams(p, 0.5), settings, scale=2.0)
    log_lhs = (n + ld * p) * math.log(l1)
    degenerate = not math.isfinite(S)
    log_rhs = (-n * math.log(2.0) + log_constant_b(n, p, lam) + ld * p * math.log(ll) - p * math.log(S)
               if not degenerate else -math.inf)
    return _report_from_logs("functional_symmetric", n, log_lhs, log_rhs, tol=tol, p=p, lam=lam, eps=0.5,
                             grid=_grid_meta(n, settings), degenerate=degenerate,
                             details={"sphere_integral": S, "l1": l1, "l_lambda": ll})


def eval_bs_asymmetric(f, lam, p, eps=0.0, settings=None, tol=DEFAULT_TOL, cfp=None, cfp_tol=1e-9):
    """``||f||_1^{n+lam'p} <= b ||f||_lam^{lam'p} (int_S (int f(x + c) <x,xi>_eps^p)^{-n/p})^{-p}``.

    ``c`` is ``c_{f,p}`` computed with ``eps = 0`` (the case that minimizes the
    right-hand side); pass ``cfp`` (a point or :class:`CfpResult`) to reuse one.
    ``eps = 1/2`` reproduces the symmetric display.
    """
    n = f.n
    lam = check_lambda(n, p, lam)
    eps = float(eps)
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"eps must lie in [0, 1/2], got {eps}")
    ld = dual_exponent(lam)
    if cfp is None:
        cfp = _santalo.find_cfp(f, AsymParams(p, 0.0), tol=cfp_tol, settings=settings)
    c = np.asarray(getattr(cfp, "c", cfp), float)
    fc = _santalo.balanced_translate(f, c)
    l1, ll = _norms(f, lam, p, settings)
    S = _sphere_term(fc, AsymParams(p, eps), settings)
    degenerate = not math.isfinite(S)
    log_lhs = (n + ld * p) * math.log(l1)
    log_rhs = (log_constant_b(n, p, lam) + ld * p * math.log(ll) - p * math.log(S)
               if not degenerate else -math.inf)
    details = {"sphere_integral": S, "l1": l1, "l_lambda": ll}
    if hasattr(cfp, "mu_residual"):
        details["mu_residual"] = cfp.mu_residual
        details["inside_hull"] = cfp.inside_hull
    return _report_from_logs("functional_asymmetric", n, log_lhs, log_rhs, tol=tol, p=p, lam=lam, eps=eps,
                             cfp=c.tolist(), grid=_grid_meta(n, settings), degenerate=degenerate,
                             details=details)


def pair_moment(f, g, prm, settings=None):
    """``int int f(x) g(y) <x, y>_eps^p dx dy``.

    The inner integral is the moment support of ``f`` at the points of the
    cloud of ``g``; it is evaluated once per distinct direction of that cloud
    and rescaled by ``|y|^p``.
    """
    cf, cg = f.cloud(settings), g.cloud(settings)
    r = np.linalg.norm(cg.points, axis=1)
    keep = r > 0
    u = cg.points[keep] / r[keep, None]
    dirs, inv = np.unique(np.round(u, 12), axis=0, return_inverse=True)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    hp = bracket_moments(dirs, cf.points, cf.masses, prm)
    return float(np.sum(cg.masses[keep] * r[keep] ** prm.p * hp[inv.ravel()]))


def eval_renyi(f, g, lam, p, eps=0.5, settings=None, tol=RENYI_TOL, cfp=None, cfp_tol=1e-9):
    """``(||f||_1 ||g||_1)^{n+lam'p} <= d (||f||_lam ||g||_lam)^{lam'p} (int int f(x+c) g(y) <x,y>_eps^p)^n``."""
    n = f.n
    lam = check_lambda(n, p, lam)
    eps = float(eps)
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"eps must lie in [0, 1/2], got {eps}")
    ld = dual_exponent(lam)
    if cfp is None:
        cfp = (np.zeros(n) if eps == 0.5
               else _santalo.find_cfp(f, AsymParams(p, 0.0), tol=cfp_tol, settings=settings))
    c = np.asarray(getattr(cfp, "c", cfp), float)
    fc = _santalo.balanced_translate(f, c)
    l1f, llf = _norms(f, lam, p, settings)
    l1g, llg = _norms(g, lam, p, settings)
    W = pair_moment(fc, g, AsymParams(p, eps), settings)
    log_lhs = (n + ld * p) * (math.log(l1f) + math.log(l1g))
    log_rhs = log_constant_d(n, p, lam) + ld * p * (math.log(llf) + math.log(llg)) + n * math.log(W)
    return _report_from_logs("renyi", n, log_lhs, log_rhs, tol=tol, p=p, lam=lam, eps=eps, cfp=c.tolist(),
                             grid=_grid_meta(n, settings), details={"pair_moment": W})


def proof_identity(f, prm, settings=None):
    """Both sides of ``int f h(M M° f, x)^p dx = n/(n+p) vol(M° f)``.

    ``h(M M° f, x)^p = (1/(n+p)) int_S h(M f, xi)^{-n-p} <x, xi>_eps^p dxi``.
    Returns ``(lhs, rhs)``.
    """
    n, p = f.n, prm.p
    grid = (settings or QuadratureSettings()).grid(n)
    h = moment_body_f(f, prm, settings).support_on(grid)
    if np.any(h <= 0):
        raise ValueError("M° f is unbounded")
    c = f.cloud(settings)
    mass = grid.weights * h ** (-n - p) / (n + p)
    inner = bracket_moments(c.points, grid.nodes, mass, prm)
    lhs = float(c.masses @ inner)
    rhs = n / (n + p) * float(integrate_sphere(grid, h ** (-n))) / n
    return lhs, rhs


# ---------------------------------------------------------------------------
# geometric inequalities
# ---------------------------------------------------------------------------


def _vol(K, grid):
    if isinstance(K, (Ellipsoid, Polytope)):
        return K.volume
    return _santalo.volume_about_center(K, grid)


def _centroid_point(K, grid):
    if isinstance(K, (Ellipsoid, Polytope)):
        return K.centroid
    return _santalo.centroid(K, grid)


def eval_geometric(K, which, p=2.0, eps=0.0, point=None, direction=None, settings=None, tol=DEFAULT_TOL):
    """Evaluate one of the geometric inequalities (see the module table)."""
    if which not in GEOMETRIC_IDS:
        raise ValueError(f"unknown geometric inequality {which!r}; expected one of {GEOMETRIC_IDS}")
    n = K.n
    grid = (settings or QuadratureSettings()).grid(n)
    w2 = unit_ball_volume(n) ** 2
    meta = _grid_meta(n, settings)
    kw = dict(tol=tol, grid=meta)
    details = {}

    if which in ("bs", "bs_santalo", "bs_centroid", "region"):
        vol = _vol(K, grid)
        if which == "bs":
            s = np.zeros(n)
        elif which == "bs_santalo":
            res = _santalo.santalo_point(K, grid=grid)
            s = res.point
            details["santalo_residual"] = res.residual
        elif which == "bs_centroid":
            s = _centroid_point(K, grid)
        else:
            if point is None:
                raise ValueError("the region test needs a point")
            s = np.asarray(point, float)
        pv = polar_volume(K.translate(-s), grid) if np.any(s) else polar_volume(K, grid)
        if not np.isfinite(pv):
            raise ValueError("the point is not interior to the body")
        details.update(point=[float(v) for v in s], volume=vol, polar_volume=pv)
        return IneqReport(which, n, vol * pv, w2, vol * pv / w2, details=details, **kw)

    if which in ("lp_bs", "busemann_petty", "hull_limit"):
        G = centroid_body(K, p, grid)
        if which == "hull_limit":
            y = np.eye(n)[0] if direction is None else np.asarray(direction, float)
            lhs = float(G.support(y))
            rhs = float(convex_hull_sym_support(K, y, grid))
            return IneqReport(which, n, lhs, rhs, lhs / rhs, p=p, **kw)
        vol = volume(K, grid)
        if which == "lp_bs":
            pv = polar_volume(G, grid)
            return IneqReport(which, n, vol * pv, w2, vol * pv / w2, p=p,
                              details={"volume": vol, "polar_volume": pv}, **kw)
        vG = volume(G, grid)
        return IneqReport(which, n, vol, vG, vol / vG, p=p, details={"centroid_volume": vG}, **kw)

    prm = AsymParams(p, eps)
    vol = volume(K, grid)
    if which == "hs_polar":
        M = moment_body_K(K, prm, grid)
        res = _santalo.santalo_point(M, grid=grid)
        lhs = vol ** (n / p + 1) * res.objective
        R = constant_R(n, p)
        return IneqReport(which, n, lhs, R, lhs / R, p=p, eps=eps,
                          details={"santalo_point": res.point.tolist(), "santalo_residual": res.residual}, **kw)
    if which == "hs_volume":
        M = moment_body_K(K, prm, grid)
        vm = volume(M, grid)
        rhs = vol ** (-n / p - 1) * vm
        r = constant_r(n, p)
        return IneqReport(which, n, r, rhs, r / rhs, p=p, eps=eps, details={"moment_volume": vm}, **kw)

    # translate_min
    f = indicator(K)
    prm0 = AsymParams(p, 0.0)
    start = _santalo.find_cfp(f, prm0, settings=settings).c if point is None else np.asarray(point, float)
    lhs, s = translate_min(f, p, start, settings)
    R = constant_R(n, p)
    vol_f = integrate_density(f, settings=settings)
    lhs = vol_f ** (n / p + 1) * lhs
    return IneqReport(which, n, lhs, R, lhs / R, p=p, eps=0.0,
                      details={"minimizer": s.tolist(), "start": start.tolist()}, **kw)


def translate_min(f, p, start, settings=None):
    """``min_s vol(M°_{0,p} f(. + s))``; returns ``(value, s)``.

    Nelder-Mead runs on the coarse discretization used by the root search;
    the value is then re-evaluated at the minimizer with ``settings``. The
    objective is smooth at its minimum, so the error of the located point
    enters the value only quadratically.
    """
    prm = AsymParams(p, 0.0)

    def make(s_settings):
        grid = s_settings.grid(f.n) if s_settings is not None else QuadratureSettings().grid(f.n)
        c = f.cloud(s_settings)

        def objective(s):
            hp = bracket_moments(grid.nodes, c.points - s, c.masses, prm)
            if np.any(hp <= 0):
                return math.inf
            return float(integrate_sphere(grid, hp ** (-f.n / p))) / f.n

        return objective, c

    coarse, c = make(_santalo.coarse_settings(f.n))
    scale = float(np.max(np.ptp(c.points, axis=0)))
    start = np.asarray(start, float)
    simplex = np.vstack([start] + [start + 0.05 * scale * e for e in np.eye(f.n)])
    res = optimize.minimize(coarse, start, method="Nelder-Mead",
                            options={"initial_simplex": simplex, "xatol": 1e-7 * scale, "fatol": 1e-14,
                                     "maxiter": 400})
    fine, _ = make(settings)
    return fine(res.x), np.asarray(res.x, float)
