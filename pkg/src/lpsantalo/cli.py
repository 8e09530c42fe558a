"""Batch runner: ``lpsantalo run config.json``.

A config is a JSON object with a ``scenarios`` array. Each scenario names an
inequality (``ineq``), its parameters (``n``, ``p``, ``lambda``, ``eps``) and
its inputs (``body`` and/or ``density``, plus ``density_g`` for the two-function
inequality), optionally a ``sweep`` over one parameter and an
``expect_saturated`` flag. Every evaluation is written as a report JSON; all
of them are summarized in ``summary.csv``; sweeps also produce a
``<name>_sweep.csv`` of ``param,value,ratio`` rows for external plotting.

Exit codes: 0 all checks pass, 1 some inequality or saturation check failed,
2 the config could not be parsed or validated, 3 a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bodies as _bodies
from . import catalog as _catalog
from .inequalities import (
    DEFAULT_TOL, FUNCTIONAL_IDS, GEOMETRIC_IDS, INEQUALITY_IDS, RENYI_TOL, check_lambda, eval_bs_asymmetric,
    eval_bs_symmetric, eval_geometric, eval_moment_ineq, eval_renyi, translate_min,
)
from .lp_bodies import AsymParams
from .quadrature import IntegrationError, QuadratureSettings
from .santalo import ConvergenceError, find_cfp

log = logging.getLogger("lpsantalo")

ENV_PREFIX = "LPSANTALO_"
SUMMARY_COLUMNS = ["ineq", "n", "p", "lambda", "eps", "lhs", "rhs", "ratio", "saturated"]
PLOT_COLUMNS = ["param", "value", "ratio"]
SWEEP_PARAMS = ("eps", "p", "lambda")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _real(value, name, allow_inf=False):
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        if allow_inf:
            return math.inf
        raise ConfigError(f"{name} must be finite")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if math.isnan(x) or (math.isinf(x) and not allow_inf):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return x


def _matrix(value, n, name):
    try:
        A = np.asarray(value, float)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an {n}x{n} matrix") from None
    if A.shape != (n, n):
        raise ConfigError(f"{name} must be an {n}x{n} matrix, got shape {A.shape}")
    if abs(np.linalg.det(A)) <= 1e-12:
        raise ConfigError(f"{name} must be invertible")
    return A


def _vector(value, n, name):
    try:
        v = np.asarray(value, float)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a vector of length {n}") from None
    if v.shape != (n,):
        raise ConfigError(f"{name} must be a vector of length {n}")
    return v


def build_body(spec, n, rng, base_dir):
    """Construct a body from its config entry."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("body must be an object with a 'type'")
    kind = spec["type"]
    if kind == "ball":
        return _bodies.ball(n, _real(spec.get("radius", 1.0), "radius"),
                            None if "center" not in spec else _vector(spec["center"], n, "center"))
    if kind == "ellipsoid":
        B = _matrix(spec.get("matrix", np.eye(n).tolist()), n, "ellipsoid matrix")
        c = None if "center" not in spec else _vector(spec["center"], n, "center")
        return _bodies.Ellipsoid(B, c)
    if kind == "triangle":
        if n != 2:
            raise ConfigError("triangle is planar (n = 2)")
        verts = spec.get("vertices", [[0, 0], [1, 0], [0, 1]])
        return _bodies.triangle(np.asarray(verts, float))
    if kind == "polygon":
        return _bodies.Polytope(np.asarray(spec["vertices"], float), label="polygon")
    if kind == "half_ball":
        return _bodies.half_ball(n)
    if kind == "random_ellipsoid":
        return _bodies.random_ellipsoid(rng, n, centered=bool(spec.get("centered", True)))
    if kind == "random_polygon":
        if n != 2:
            raise ConfigError("random_polygon is planar (n = 2)")
        return _bodies.random_polygon(rng, int(spec.get("vertices", 12)), bool(spec.get("symmetric", False)))
    if kind == "random_smooth":
        if n != 2:
            raise ConfigError("random_smooth is planar (n = 2)")
        return _bodies.random_smooth_body(rng, bool(spec.get("symmetric", False)))
    if kind == "random_star":
        return _bodies.random_star_body(rng, n, symmetric=bool(spec.get("symmetric", False)))
    if kind == "file":
        path = Path(base_dir, spec.get("path", ""))
        if not path.is_file():
            raise ConfigError(f"body file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"body file {path} is not valid JSON: {exc}") from None
        body = _bodies.body_from_json(data)
        if body.n != n:
            raise ConfigError(f"body file dimension {body.n} does not match n={n}")
        return body
    raise ConfigError(f"unknown body type {kind!r}")


def build_density(spec, n, p, lam, rng, base_dir):
    """Construct a density from its config entry."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("density must be an object with a 'type'")
    kind = spec["type"]
    if kind == "indicator":
        return _catalog.indicator(build_body(spec.get("body", {"type": "ball"}), n, rng, base_dir))
    if kind == "profile":
        plam = _real(spec.get("lambda", lam), "profile lambda", allow_inf=True)
        try:
            check_lambda(n, p, plam)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if "body" in spec:
            f = _catalog.profile(build_body(spec["body"], n, rng, base_dir), plam, p,
                                 amplitude=_real(spec.get("amplitude", 1.0), "amplitude"))
        else:
            if spec.get("matrix") == "random":
                B = _bodies.random_matrix(rng, n)
            else:
                B = _matrix(spec.get("matrix", np.eye(n).tolist()), n, "profile matrix")
            f = _catalog.ball_profile(n, plam, p, B, amplitude=_real(spec.get("amplitude", 1.0), "amplitude"))
        if "center" in spec:
            f = f.translate(_vector(spec["center"], n, "center"))
        return f
    if kind == "perturbed":
        base = build_density(spec.get("base", {"type": "profile"}), n, p, lam, rng, base_dir)
        w = None if "w" not in spec else _vector(spec["w"], n, "w")
        try:
            return _catalog.perturbed(base, _real(spec.get("a", 0.3), "a"), w, _real(spec.get("phase", 0.0), "phase"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if kind == "tilted":
        base = build_density(spec.get("base", {"type": "profile"}), n, p, lam, rng, base_dir)
        return _catalog.tilted(base, _vector(spec.get("w", [0.5] + [0.0] * (n - 1)), n, "w"))
    if kind == "random_asymmetric":
        return _catalog.random_asymmetric_density(rng, n, p=p)
    raise ConfigError(f"unknown density type {kind!r}")


@dataclass
class Scenario:
    """One validated scenario: an inequality, its parameters and its inputs."""

    name: str
    ineq: str
    n: int
    p: float
    lam: float
    eps: float
    tol: float
    seed: int
    spec: dict
    base_dir: Path
    expect_saturated: bool | None = None
    sweep_param: str | None = None
    sweep_values: list = field(default_factory=list)

    def points(self):
        """Parameter sets to evaluate: one, or one per sweep value."""
        if self.sweep_param is None:
            return [dict(p=self.p, lam=self.lam, eps=self.eps)]
        key = {"lambda": "lam"}.get(self.sweep_param, self.sweep_param)
        return [dict(dict(p=self.p, lam=self.lam, eps=self.eps), **{key: v}) for v in self.sweep_values]


def _validate_params(ineq, n, p, lam, eps):
    try:
        AsymParams(p, eps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if ineq in FUNCTIONAL_IDS:
        try:
            check_lambda(n, p, lam)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if ineq in ("functional_asymmetric", "renyi") and eps > 0.5:
        raise ConfigError(f"eps must lie in [0, 1/2] for {ineq}, got {eps}")


def parse_config(data, base_dir=".", seed=None, tol=None):
    """Validate a config object and return its scenarios."""
    if not isinstance(data, dict) or not isinstance(data.get("scenarios"), list):
        raise ConfigError("config must be an object with a 'scenarios' array")
    seed = int(data.get("seed", 0)) if seed is None else int(seed)
    default_tol = tol if tol is not None else data.get("tol")
    scenarios, names = [], set()
    for i, spec in enumerate(data["scenarios"]):
        if not isinstance(spec, dict):
            raise ConfigError(f"scenario {i} must be an object")
        ineq = spec.get("ineq")
        if ineq not in INEQUALITY_IDS:
            raise ConfigError(f"scenario {i}: unknown inequality {ineq!r}; expected one of {', '.join(INEQUALITY_IDS)}")
        n = int(spec.get("n", 2))
        if n not in (2, 3):
            raise ConfigError(f"scenario {i}: n must be 2 or 3")
        p = _real(spec.get("p", 2.0), "p")
        lam = _real(spec.get("lambda", "inf"), "lambda", allow_inf=True)
        eps = _real(spec.get("eps", 0.5 if ineq in ("functional_symmetric",) else 0.0), "eps")
        name = re.sub(r"[^A-Za-z0-9_.-]+", "_", str(spec.get("name", f"{i:03d}_{ineq}")))
        if name in names:
            raise ConfigError(f"duplicate scenario name {name!r}")
        names.add(name)
        stol = spec.get("tol", default_tol)
        stol = _real(stol, "tol") if stol is not None else (RENYI_TOL if ineq == "renyi" else DEFAULT_TOL)
        sc = Scenario(name, ineq, n, p, lam, eps, stol, seed, spec, Path(base_dir),
                      expect_saturated=spec.get("expect_saturated"))
        sweep = spec.get("sweep")
        if sweep is not None:
            if not isinstance(sweep, dict) or sweep.get("param") not in SWEEP_PARAMS:
                raise ConfigError(f"scenario {name}: sweep needs 'param' in {SWEEP_PARAMS} and 'values'")
            values = sweep.get("values")
            if not isinstance(values, list) or not values:
                raise ConfigError(f"scenario {name}: sweep values must be a non-empty list")
            sc.sweep_param = sweep["param"]
            sc.sweep_values = [_real(v, sweep["param"], allow_inf=sweep["param"] == "lambda") for v in values]
        for pt in sc.points():
            _validate_params(ineq, n, pt["p"], pt["lam"], pt["eps"])
        needs_body = ineq in GEOMETRIC_IDS or ineq == "moment"
        needs_density = ineq in FUNCTIONAL_IDS
        if needs_body and "body" not in spec:
            raise ConfigError(f"scenario {name}: '{ineq}' needs a 'body'")
        if needs_density and "density" not in spec:
            raise ConfigError(f"scenario {name}: '{ineq}' needs a 'density'")
        if ineq == "renyi" and "density_g" not in spec:
            raise ConfigError(f"scenario {name}: 'renyi' needs 'density_g'")
        if ineq == "region" and "point" not in spec:
            raise ConfigError(f"scenario {name}: 'region' needs a 'point'")
        # build inputs once to surface validation errors before any computation
        _inputs(sc, sc.points()[0])
        scenarios.append(sc)
    return scenarios


def _inputs(sc, pt):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([sc.seed, _stable_hash(sc.name)])))
    spec, n = sc.spec, sc.n
    body = build_body(spec["body"], n, rng, sc.base_dir) if "body" in spec else None
    f = build_density(spec["density"], n, pt["p"], pt["lam"], rng, sc.base_dir) if "density" in spec else None
    g = build_density(spec["density_g"], n, pt["p"], pt["lam"], rng, sc.base_dir) if "density_g" in spec else None
    return body, f, g


def _stable_hash(name):
    return int.from_bytes(name.encode()[:16].ljust(16, b"\0"), "little") % (2**63)


# ---------------------------------------------------------------------------
# execution and output
# ---------------------------------------------------------------------------


def evaluate(sc, pt, settings):
    """Run one parameter point of a scenario and return its report."""
    body, f, g = _inputs(sc, pt)
    p, lam, eps = pt["p"], pt["lam"], pt["eps"]
    spec = sc.spec
    if sc.ineq in GEOMETRIC_IDS:
        point = None if "point" not in spec else _vector(spec["point"], sc.n, "point")
        direction = None if "direction" not in spec else _vector(spec["direction"], sc.n, "direction")
        return eval_geometric(body, sc.ineq, p=p, eps=eps, point=point, direction=direction,
                              settings=settings, tol=sc.tol)
    if sc.ineq == "moment":
        return eval_moment_ineq(f, body, lam, p, settings=settings, tol=sc.tol)
    if sc.ineq == "functional_symmetric":
        return eval_bs_symmetric(f, lam, p, settings=settings, tol=sc.tol)
    if sc.ineq == "functional_asymmetric":
        cfp = find_cfp(f, AsymParams(p, 0.0), settings=settings)
        rep = eval_bs_asymmetric(f, lam, p, eps, settings=settings, tol=sc.tol, cfp=cfp)
        rep.details["cfp_candidates"] = cfp.metadata()["candidates"]
        if spec.get("compare_minimizer"):
            _, s = translate_min(f, p, cfp.c, settings)
            rep.details["volume_minimizing_translate"] = s.tolist()
        return rep
    return eval_renyi(f, g, lam, p, eps, settings=settings, tol=sc.tol)


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def summary_row(rep):
    return [rep.ineq, str(rep.n), _fmt(rep.p), _fmt(rep.lam), _fmt(rep.eps), _fmt(rep.lhs), _fmt(rep.rhs),
            _fmt(rep.ratio), _fmt(rep.saturated)]


def write_summary(reports, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for rep in reports:
            w.writerow(summary_row(rep))


def emit_plot_data(reports, path, param=None):
    """Write ``param,value,ratio`` rows (header only for an empty report set).

    ``param`` is one of ``eps``, ``p``, ``lambda``; each report contributes its
    value of that parameter and its ratio.
    """
    attr = {"lambda": "lam"}.get(param, param)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for rep in reports:
            w.writerow([param, _fmt(getattr(rep, attr)), _fmt(rep.ratio)])
    return path


def _check(sc, rep):
    """Problems with one report, as messages (empty when all checks pass)."""
    problems = []
    if not rep.holds:
        problems.append(f"ratio {rep.ratio:.9g} exceeds 1 + tol ({sc.tol:g})")
    if sc.expect_saturated is not None and bool(sc.expect_saturated) != rep.saturated:
        problems.append(f"expected saturated={bool(sc.expect_saturated)}, got ratio {rep.ratio:.9g}")
    return problems


def run(config_path, out=None, seed=None, resolution=None, tol=None):
    """Execute a config file; returns the process exit code."""
    config_path = Path(config_path)
    try:
        data = json.loads(config_path.read_text())
        scenarios = parse_config(data, config_path.parent, seed=seed, tol=tol)
    except FileNotFoundError:
        log.error("config file not found: %s", config_path)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        log.error("config is not valid JSON: %s", exc)
        return EXIT_CONFIG
    except (ConfigError, ValueError) as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG

    res = resolution if resolution is not None else data.get("resolution")
    settings = QuadratureSettings(sphere_resolution=int(res)) if res is not None else None
    out_dir = Path(out if out is not None else data.get("out", "lpsantalo_out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    all_reports, failed_checks, numeric_failures = [], 0, 0
    for sc in scenarios:
        sweep_reports = []
        for k, pt in enumerate(sc.points()):
            tag = sc.name if sc.sweep_param is None else f"{sc.name}_{k:02d}"
            try:
                rep = evaluate(sc, pt, settings)
            except (ConvergenceError, IntegrationError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
                numeric_failures += 1
                log.error("scenario %s: numerical failure: %s", tag, exc)
                (out_dir / f"{tag}.error.json").write_text(
                    json.dumps({"scenario": tag, "ineq": sc.ineq, "error": type(exc).__name__,
                                "message": str(exc)}, indent=2) + "\n")
                continue
            problems = _check(sc, rep)
            for msg in problems:
                log.error("scenario %s: %s", tag, msg)
            failed_checks += bool(problems)
            payload = dict(rep.to_json(), scenario=tag, checks_passed=not problems)
            (out_dir / f"{tag}.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
            log.info("%s: %s ratio=%.12g saturated=%s", tag, rep.ineq, rep.ratio, rep.saturated)
            all_reports.append(rep)
            sweep_reports.append(rep)
        if sc.sweep_param is not None:
            emit_plot_data(sweep_reports, out_dir / f"{sc.name}_sweep.csv", sc.sweep_param)
    write_summary(all_reports, out_dir / "summary.csv")
    if numeric_failures:
        return EXIT_NUMERIC
    return EXIT_CHECK if failed_checks else EXIT_OK


def _env(name, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"environment variable {ENV_PREFIX + name}={raw!r} is invalid") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="lpsantalo", description="Evaluate Blaschke-Santaló-type inequalities.")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the scenarios of a JSON config")
    r.add_argument("config", help="path to the config JSON")
    r.add_argument("--out", help="output directory (default: lpsantalo_out)")
    r.add_argument("--seed", type=int, help="seed for random inputs (u64)")
    r.add_argument("--resolution", type=int, help="sphere grid resolution")
    r.add_argument("--tol", type=float, help="default ratio/saturation tolerance")
    r.add_argument("--verbose", action="store_true", help="log every report")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        out = args.out if args.out is not None else _env("OUT", str)
        seed = args.seed if args.seed is not None else _env("SEED", int)
        resolution = args.resolution if args.resolution is not None else _env("RESOLUTION", int)
        tol = args.tol if args.tol is not None else _env("TOL", float)
        verbose = args.verbose or (_env("VERBOSE", str) or "").lower() in ("1", "true", "yes")
    except ConfigError as exc:
        print(f"lpsantalo: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if seed is not None and not 0 <= seed < 2**64:
        print("lpsantalo: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args.config, out=out, seed=seed, resolution=resolution, tol=tol)


if __name__ == "__main__":
    sys.exit(main())
