"""Configuration-driven experiment runner.

A config is one JSON document describing one mesh, one metric, the energy
parameters, the Dirichlet data and a battery of checks.  ``run`` solves,
evaluates every check (concurrently), writes CSV artifacts and a JSON
report, and maps the outcome onto the exit code:

    0 all checks pass, 1 some check fails, 2 a solve diverged, 3 bad config.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import boundary as bd
from .energy import EnergyParams
from .errors import ConfigError, NonReproducible, PharmonicError, SolveDiverged
from .grid import MAX_LEVEL, ball_region, build_mesh, dyadic_hierarchy, write_field_csv
from .harness import (campanato_sequence, comparison_series, convex_hull_check, hessian_quotient,
                      hole_filling_table, holder_exponent, morrey_decay, write_csv)
from .metric import metric_families, metric_from_json
from .parallel import parallel_settings
from .regression import matches, pinned
from .solver import (DEFAULT_MU_SCHEDULE, DEFAULT_TOLERANCE, DirichletProblem, critical_rhs,
                     pharmonic_extension, rhs_families, solve_critical, solve_dirichlet, w1n_distance)

EXIT_PASS, EXIT_FAIL, EXIT_DIVERGED, EXIT_CONFIG = 0, 1, 2, 3
FIT_RESIDUAL_MAX = 0.3

DEFAULTS = {
    "metric": {"kind": "constant", "scale": 1.0},
    "mesh": {"kind": "disk"},
    "mesh_level": 5,
    "params": {"p": 2.0, "N": 1, "mu_schedule": list(DEFAULT_MU_SCHEDULE), "Gamma": 0.0},
    "boundary": {"family": "affine", "params": {"A": [[1.0, 0.0]]}},
    "rhs": {"tag": "zero", "params": {}},
    "checks": [],
    "tolerance": DEFAULT_TOLERANCE,
    "max_iterations": 200,
    "deterministic": True,
    "seed": 0,
    "workers": 1,
    "output_dir": "pharmonic-out",
}


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    doc: dict

    @property
    def params(self) -> EnergyParams:
        p = self.doc["params"]
        return EnergyParams(p=float(p["p"]), N=int(p["N"]), Gamma=float(p.get("Gamma", 0.0)))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.doc).encode()).hexdigest()

    def __getitem__(self, key):
        return self.doc[key]


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k in ("params", "mesh"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _require(cond, message, path):
    if not cond:
        raise ConfigError(message, path)


def _point(value, path):
    try:
        pt = np.asarray(value, dtype=float).reshape(2)
    except (TypeError, ValueError):
        raise ConfigError("expected a point [x, y]", path) from None
    return pt


def _inside(center, r, mesh_spec, path):
    c = np.linalg.norm(center)
    _require(r > 0, "radius must be positive", path)
    _require(c + r <= 1.0 + 1e-12, f"ball of radius {r:g} around {center.tolist()} leaves the unit ball", path)
    if mesh_spec.get("kind") == "annulus":
        _require(c - r >= float(mesh_spec.get("inner_radius", 0.25)) - 1e-12,
                 "ball meets the hole of the annulus", path)


CHECK_TYPES = ("campanato", "comparison", "convex_hull", "critical_consistency", "extension",
               "hessian", "hole_filling", "holder", "morrey")


def parse_config(doc: dict) -> ExperimentConfig:
    """Fill defaults and validate; raises :class:`ConfigError` naming the field."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(DEFAULTS))
    _require(not unknown, f"unknown keys {unknown}", "")
    cfg = _merge(DEFAULTS, doc)
    try:
        metric_from_json(cfg["metric"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "metric") from None
    lvl = cfg["mesh_level"]
    _require(isinstance(lvl, int) and 0 <= lvl <= MAX_LEVEL, f"must be an integer in [0, {MAX_LEVEL}]",
             "mesh_level")
    _require(cfg["mesh"].get("kind", "disk") in ("disk", "annulus"), "unknown mesh kind", "mesh.kind")
    p = cfg["params"]
    _require(isinstance(p.get("p"), (int, float)) and p["p"] >= 2, "p must be >= 2", "params.p")
    _require(isinstance(p.get("N"), int) and p["N"] >= 1, "N must be a positive integer", "params.N")
    _require(isinstance(p.get("Gamma", 0.0), (int, float)) and p.get("Gamma", 0.0) >= 0,
             "Gamma must be >= 0", "params.Gamma")
    sched = p.get("mu_schedule", [])
    _require(isinstance(sched, list) and all(isinstance(m, (int, float)) and m >= 0 for m in sched),
             "must be a list of non-negative numbers", "params.mu_schedule")
    b = cfg["boundary"]
    _require(isinstance(b, dict) and b.get("family") in bd.FAMILIES,
             f"unknown family {b.get('family') if isinstance(b, dict) else b!r}", "boundary.family")
    try:
        data = bd.boundary_from_json(b)
    except TypeError as exc:
        raise ConfigError(str(exc), "boundary.params") from None
    _require(data.N == p["N"], f"boundary data has {data.N} components, params.N = {p['N']}", "boundary")
    r = cfg["rhs"]
    _require(isinstance(r, dict) and r.get("tag") in rhs_families(), f"unknown tag {r.get('tag')!r}", "rhs.tag")
    _require(isinstance(cfg["tolerance"], (int, float)) and cfg["tolerance"] > 0, "must be positive", "tolerance")
    _require(isinstance(cfg["max_iterations"], int) and cfg["max_iterations"] > 0, "must be positive",
             "max_iterations")
    _require(isinstance(cfg["workers"], int) and cfg["workers"] >= 1, "must be >= 1", "workers")
    _require(isinstance(cfg["checks"], list), "must be a list", "checks")
    names = set()
    for i, chk in enumerate(cfg["checks"]):
        path = f"checks[{i}]"
        _require(isinstance(chk, dict), "must be an object", path)
        _require(chk.get("type") in CHECK_TYPES, f"unknown check type {chk.get('type')!r}", path + ".type")
        chk.setdefault("name", f"{chk['type']}_{i}")
        _require(chk["name"] not in names, "duplicate check name", path + ".name")
        names.add(chk["name"])
        _validate_check(chk, cfg, path)
    return ExperimentConfig(cfg)


def _validate_check(chk, cfg, path):
    mesh_spec = cfg["mesh"]
    kind = chk["type"]
    if kind in ("comparison", "morrey"):
        c = _point(chk.get("center", [0.0, 0.0]), path + ".center")
        radii = chk.get("radii")
        _require(isinstance(radii, list) and len(radii) >= 2, "need at least two radii", path + ".radii")
        for j, r in enumerate(radii):
            _inside(c, float(r), mesh_spec, f"{path}.radii[{j}]")
    elif kind in ("campanato",):
        c = _point(chk.get("center", [0.0, 0.0]), path + ".center")
        _inside(c, float(chk.get("r0", 0.5)), mesh_spec, path + ".r0")
    elif kind in ("holder", "hessian", "extension"):
        c = _point(chk.get("center", [0.0, 0.0]), path + ".center")
        _inside(c, float(chk.get("radius", 0.5)), mesh_spec, path + ".radius")
    elif kind == "hole_filling":
        centers = chk.get("centers", [[0.0, 0.0]])
        radii = chk.get("radii", [0.4])
        for j, c in enumerate(centers):
            c = _point(c, f"{path}.centers[{j}]")
            for r in radii:
                _inside(c, float(r), mesh_spec, f"{path}.radii")
    if "regression" in chk:
        try:
            pinned(chk["regression"])
        except KeyError:
            raise ConfigError(f"no pinned value {chk['regression']!r}", path + ".regression") from None


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(doc)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    type: str
    passed: bool
    measured: dict
    tolerance: dict
    diverged: bool = False
    error: Optional[str] = None
    elapsed: float = 0.0
    table: Optional[tuple] = None  # (header, rows)

    def to_json(self) -> dict:
        return {"name": self.name, "type": self.type, "passed": self.passed,
                "measured": _jsonable(self.measured), "tolerance": _jsonable(self.tolerance),
                "diverged": self.diverged, "error": self.error, "elapsed": self.elapsed}


@dataclass
class RunReport:
    config_hash: str
    mesh: dict
    checks: list
    artifacts: dict
    timings: dict
    exit_code: int
    config: dict = field(default_factory=dict)
    solve: Optional[dict] = None
    subcommand: str = "run"

    def to_json(self) -> dict:
        return {"config_hash": self.config_hash, "mesh": self.mesh, "subcommand": self.subcommand,
                "checks": [c.to_json() if isinstance(c, CheckResult) else c for c in self.checks],
                "artifacts": self.artifacts, "timings": self.timings, "exit_code": self.exit_code,
                "config": self.config, "solve": _jsonable(self.solve)}

    @property
    def passed(self) -> bool:
        return self.exit_code == EXIT_PASS


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


class Context:
    """Shared solves for a battery, computed once on first use."""

    def __init__(self, cfg: ExperimentConfig, mesh_level: int):
        self.cfg = cfg
        self.mesh = build_mesh(cfg["mesh"], mesh_level)
        self.metric = metric_from_json(cfg["metric"])
        self.params = cfg.params
        self.data = bd.boundary_from_json(cfg["boundary"])
        self.tolerance = float(cfg["tolerance"])
        self._lock = threading.Lock()
        self._cache: dict = {}

    @property
    def boundary_values(self):
        return self.data(self.mesh.vertices[self.mesh.boundary_vertices])

    def _once(self, key, fn):
        with self._lock:
            if key not in self._cache:
                try:
                    self._cache[key] = (fn(), None)
                except SolveDiverged as exc:
                    self._cache[key] = (None, exc)
            value, exc = self._cache[key]
        if exc is not None:
            raise exc
        return value

    def solution(self):
        sched = self.cfg["params"].get("mu_schedule", list(DEFAULT_MU_SCHEDULE))
        problem = DirichletProblem(self.mesh, self.metric, self.params, self.boundary_values)
        return self._once("dirichlet", lambda: solve_dirichlet(
            problem, self.tolerance, self.cfg["max_iterations"], mu_schedule=sched))

    def _rhs_key(self, Gamma):
        gam = self.params.Gamma if Gamma is None else float(Gamma)
        tag = self.cfg["rhs"]["tag"] if gam > 0 else "zero"
        return ("critical", tag, gam)

    def cached_critical(self):
        """The configured critical solve, if some check already ran it."""
        value, _ = self._cache.get(self._rhs_key(None), (None, None))
        return value

    def critical(self, Gamma=None):
        key = self._rhs_key(Gamma)
        _, tag, gam = key
        rhs = critical_rhs(tag, Gamma=gam, **self.cfg["rhs"].get("params", {}))
        return self._once(key, lambda: solve_critical(
            self.mesh, self.metric, rhs, self.boundary_values, EnergyParams(p=2.0, N=self.params.N),
            self.tolerance, self.cfg["max_iterations"]))


def _with_regression(chk, primary, passed, measured, tol):
    if "regression" in chk:
        key = chk["regression"]
        value, rtol = pinned(key)
        ok = matches(key, primary)
        measured["regression_value"] = value
        tol["regression_rtol"] = rtol
        passed = passed and ok
    return passed


def _check_convex_hull(ctx, chk):
    sol = ctx.solution()
    res = convex_hull_check(sol.field, ctx.boundary_values, seed=ctx.cfg["seed"])
    tol = float(chk.get("tolerance", 1e-6))
    return (res.relative_violation <= tol, res.summary(), {"relative_violation": tol}, None)


def _check_campanato(ctx, chk):
    sol = ctx.solution()
    hier = dyadic_hierarchy(ctx.mesh, chk.get("center", [0.0, 0.0]), float(chk.get("r0", 0.5)),
                            float(chk.get("delta", 0.5)), int(chk.get("count", 4)))
    tab = campanato_sequence(sol.field, hier, ctx.params)
    measured = tab.summary()
    ok = bool(np.all(tab.a <= 2 * tab.mean_p_norms * (1 + 1e-12)))
    tol: dict = {"triangle_bound": 2.0}
    expect = chk.get("expect")
    if expect == "zero":
        atol = float(chk.get("tolerance", 1e-12))
        ok = ok and bool(np.all(tab.a <= atol * max(tab.mean_p_norms.max(), 1.0)))
        tol["a_max_relative"] = atol
    elif expect == "decay":
        ok = ok and tab.fitted_exponent > 0 and bool(np.all(np.diff(tab.a[1:]) < 0))
        tol["fitted_exponent_min"] = 0.0
    elif expect == "none":
        bound = float(chk.get("max_exponent", 0.05))
        ok = ok and tab.fitted_exponent < bound
        tol["fitted_exponent_max"] = bound
    ok = _with_regression(chk, tab.fitted_exponent, ok, measured, tol)
    return ok, measured, tol, (tab.header, tab.rows())


def _check_morrey(ctx, chk):
    sol = ctx.solution()
    rec = morrey_decay(sol.field, chk.get("center", [0.0, 0.0]), chk["radii"], ctx.params, ctx.metric)
    measured = rec.summary()
    lo = float(chk.get("min_exponent", 0.0))
    if chk.get("expect") == "degenerate":
        ok = rec.degenerate
    else:
        ok = (not rec.degenerate) and rec.exponent > lo and rec.fit_residual < FIT_RESIDUAL_MAX
    tol = {"min_exponent": lo, "fit_residual_max": FIT_RESIDUAL_MAX}
    ok = _with_regression(chk, rec.exponent, ok, measured, tol)
    return ok, measured, tol, (rec.header, rec.rows())


def _check_holder(ctx, chk):
    sol = ctx.solution()
    region = ball_region(ctx.mesh, chk.get("center", [0.0, 0.0]), float(chk.get("radius", 0.5)))
    target = sol.field if chk.get("of", "field") == "field" else sol.field.gradients
    fit = holder_exponent(target, region, chk.get("scales", [0.2, 0.1, 0.05, 0.025]))
    measured = fit.summary()
    tol: dict = {"fit_residual_max": FIT_RESIDUAL_MAX}
    ok = fit.exponent == math.inf or fit.fit_residual < FIT_RESIDUAL_MAX
    if "target" in chk:
        band = float(chk.get("tolerance", 0.1))
        ok = ok and abs(fit.exponent - float(chk["target"])) <= band
        tol.update(target=float(chk["target"]), band=band)
    return ok, measured, tol, (fit.header, fit.rows())


def _check_comparison(ctx, chk):
    sol = ctx.solution()
    beta = float(chk.get("beta", 0.99))
    series = comparison_series(sol.field, chk.get("center", [0.0, 0.0]), chk["radii"], ctx.metric,
                               ctx.params, mode=chk.get("mode", "holder"), beta=beta,
                               tolerance=float(chk.get("solve_tolerance", ctx.tolerance)),
                               seed=ctx.cfg["seed"])
    measured = series.summary()
    slope_min = float(chk.get("min_slope", beta - 0.2))
    ok = series.fit.slope >= slope_min and series.fit.residual < FIT_RESIDUAL_MAX
    if ctx.metric.kind == "constant":
        ok = bool(max(r.lhs for r in series.records) <= 2 * ctx.tolerance)
    tol = {"min_slope": slope_min, "fit_residual_max": FIT_RESIDUAL_MAX}
    ok = _with_regression(chk, series.fit.slope, ok, measured, tol)
    rows = [r.row() for r in series.records]
    return ok, measured, tol, (series.records[0].header, rows)


def _check_extension(ctx, chk):
    sol = ctx.solution()
    region = ball_region(ctx.mesh, chk.get("center", [0.0, 0.0]), float(chk.get("radius", 0.5)))
    ext = pharmonic_extension(sol.field, region, params=ctx.params, tolerance=ctx.tolerance,
                              metric=ctx.metric)
    e_v = ext.extra["restricted_energy"]
    measured = {"extension_energy": ext.energy_value, "restricted_energy": e_v,
                "residual_norm": ext.residual_norm, "iterations": ext.iterations}
    ok = ext.energy_value <= e_v * (1 + 1e-12) + 1e-300
    return ok, measured, {"minimality": "E(w) <= E(v)"}, None


def _check_hessian(ctx, chk):
    sol = ctx.solution()
    ball = ball_region(ctx.mesh, chk.get("center", [0.0, 0.0]), float(chk.get("radius", 0.25)))
    if "h_list" in chk:
        hs = [float(h) for h in chk["h_list"]]
    else:
        hs = [float(f) * ctx.mesh.h for f in chk.get("h_factors", [8, 4, 2])]
    rec = hessian_quotient(sol.field, ctx.metric, ball, ctx.params, hs)
    measured = rec.summary()
    ok = rec.cauchy and rec.extrapolated_limit <= rec.bound_factor
    tol = {"bound": "extrapolated_limit <= bound_factor"}
    ok = _with_regression(chk, rec.empirical_constant, ok, measured, tol)
    return ok, measured, tol, (rec.header, rec.rows())


def _check_hole_filling(ctx, chk):
    sol = ctx.critical()
    tab = hole_filling_table(sol.field, chk.get("centers", [[0.0, 0.0]]), chk.get("radii", [0.4]))
    measured = tab.summary()
    measured["iterations"] = sol.iterations
    ok = all(0.0 <= r.theta < 1.0 for r in tab.records)
    return ok, measured, {"theta_max_exclusive": 1.0}, (tab.records[0].header, tab.rows())


def _check_critical_consistency(ctx, chk):
    crit = ctx.critical(Gamma=0.0)
    problem = DirichletProblem(ctx.mesh, ctx.metric, EnergyParams(p=2.0, N=ctx.params.N), ctx.boundary_values)
    dir_ = solve_dirichlet(problem, ctx.tolerance)
    d = w1n_distance(crit.field, dir_.field, 2.0)
    return d <= 2 * ctx.tolerance, {"w1n_distance": d}, {"w1n_distance_max": 2 * ctx.tolerance}, None


CHECKS: dict[str, Callable] = {
    "campanato": _check_campanato,
    "comparison": _check_comparison,
    "convex_hull": _check_convex_hull,
    "critical_consistency": _check_critical_consistency,
    "extension": _check_extension,
    "hessian": _check_hessian,
    "hole_filling": _check_hole_filling,
    "holder": _check_holder,
    "morrey": _check_morrey,
}

SUBCOMMAND_TYPES = {
    "solve": (),
    "extend": ("extension",),
    "compare": ("comparison",),
    "decay": ("campanato", "morrey", "holder"),
    "hessian": ("hessian",),
    "critical": ("hole_filling", "critical_consistency"),
    "run": CHECK_TYPES,
}


def _run_check(ctx, chk) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, measured, tol, table = CHECKS[chk["type"]](ctx, chk)
        res = CheckResult(chk["name"], chk["type"], bool(ok), measured, tol, table=table)
    except SolveDiverged as exc:
        res = CheckResult(chk["name"], chk["type"], False, {}, {}, diverged=True, error=str(exc))
    except PharmonicError as exc:
        res = CheckResult(chk["name"], chk["type"], False, {}, {}, error=f"{type(exc).__name__}: {exc}")
    res.elapsed = time.perf_counter() - t0
    return res


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: ExperimentConfig, out_dir=None, mesh_level: Optional[int] = None, workers: Optional[int] = None,
        deterministic: Optional[bool] = None, subcommand: str = "run") -> RunReport:
    """Solve, evaluate the selected checks and write artifacts into ``out_dir``."""
    t_start = time.perf_counter()
    out = Path(out_dir if out_dir is not None else cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    level = cfg["mesh_level"] if mesh_level is None else int(mesh_level)
    if not 0 <= level <= MAX_LEVEL:
        raise ConfigError(f"must be in [0, {MAX_LEVEL}]", "mesh_level")
    nworkers = int(workers if workers is not None else cfg["workers"])
    det = bool(cfg["deterministic"] if deterministic is None else deterministic)
    types = SUBCOMMAND_TYPES[subcommand]
    selected = [c for c in cfg["checks"] if c["type"] in types]
    timings: dict = {}
    with parallel_settings(workers=nworkers, deterministic=det):
        ctx = Context(cfg, level)
        solve_info = None
        diverged = False
        best = None
        needs_solution = subcommand in ("solve", "run") or any(
            c["type"] not in ("hole_filling", "critical_consistency") for c in selected)
        t0 = time.perf_counter()
        if needs_solution:
            try:
                sol = ctx.solution()
                solve_info, best = sol.summary(), sol.field
            except SolveDiverged as exc:
                diverged = True
                if exc.best is not None:
                    solve_info, best = exc.best.summary(), exc.best.field
        if subcommand == "critical":
            try:
                ctx.critical()
            except SolveDiverged:
                diverged = True
        timings["solve"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        if nworkers > 1 and len(selected) > 1:
            with ThreadPoolExecutor(max_workers=nworkers) as pool:
                results = list(pool.map(lambda c: _run_check(ctx, c), selected))
        else:
            results = [_run_check(ctx, c) for c in selected]
        timings["checks"] = time.perf_counter() - t0

    # serialized artifact writes, in a fixed order
    artifacts = {}
    if best is not None:
        write_field_csv(best, out / "solution.csv")
        artifacts["solution.csv"] = _sha256(out / "solution.csv")
    crit = ctx.cached_critical()
    if crit is not None:
        write_field_csv(crit.field, out / "critical_solution.csv")
        artifacts["critical_solution.csv"] = _sha256(out / "critical_solution.csv")
    for res in results:
        if res.table is not None:
            name = f"{res.name}.csv"
            write_csv(out / name, *res.table)
            artifacts[name] = _sha256(out / name)
    diverged = diverged or any(r.diverged for r in results)
    if diverged:
        code = EXIT_DIVERGED
    elif all(r.passed for r in results):
        code = EXIT_PASS
    else:
        code = EXIT_FAIL
    timings["total"] = time.perf_counter() - t_start
    report = RunReport(
        config_hash=cfg.config_hash,
        mesh={"level": level, "hash": ctx.mesh.content_hash, "kind": cfg["mesh"].get("kind", "disk"),
              "vertices": ctx.mesh.n_vertices, "triangles": ctx.mesh.n_triangles},
        checks=results, artifacts=artifacts, timings=timings, exit_code=code,
        config=cfg.doc, solve=solve_info, subcommand=subcommand,
    )
    (out / "config.json").write_text(json.dumps(cfg.doc, indent=2, sort_keys=True) + "\n")
    (out / "report.json").write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    return report


def replay(report_path, out_dir=None, workers: Optional[int] = None) -> RunReport:
    """Re-run the config stored in a report (deterministic mode forced) and
    byte-compare every CSV artifact.

    Raises
    ------
    NonReproducible
        On the first artifact whose content differs, with the 1-based row.
    """
    report_path = Path(report_path)
    try:
        doc = json.loads(report_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {report_path}: {exc}") from None
    cfg = parse_config(doc["config"])
    src = report_path.parent
    dst = Path(out_dir) if out_dir is not None else src / "replay"
    fresh = run(cfg, dst, mesh_level=doc["mesh"]["level"], workers=workers, deterministic=True,
                subcommand=doc.get("subcommand", "run"))
    for name in sorted(doc["artifacts"]):
        if not name.endswith(".csv"):
            continue
        old_path, new_path = src / name, dst / name
        if not old_path.exists():
            raise NonReproducible(f"artifact {name} is missing", artifact=name, row=None)
        if not new_path.exists():
            raise NonReproducible(f"replay did not produce {name}", artifact=name, row=None)
        old = old_path.read_bytes().split(b"\n")
        new = new_path.read_bytes().split(b"\n")
        for i in range(max(len(old), len(new))):
            a = old[i] if i < len(old) else None
            b = new[i] if i < len(new) else None
            if a != b:
                raise NonReproducible(f"{name} differs at row {i + 1}: {a!r} != {b!r}", artifact=name, row=i + 1)
    return fresh


def list_registries() -> str:
    lines = ["metric families:"]
    lines += [f"  {m}" for m in metric_families()]
    lines.append("boundary families:")
    lines += [f"  {b}" for b in bd.boundary_families()]
    lines.append("critical rhs families:")
    lines += [f"  {r}" for r in rhs_families()]
    lines.append("check types:")
    lines += [f"  {c}" for c in sorted(CHECK_TYPES)]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pharmonic", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_TYPES:
        sp = sub.add_parser(name, help=f"{name} battery" if name != "solve" else "solve the Dirichlet problem")
        sp.add_argument("--config", required=True, help="experiment config (JSON)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--deterministic", action="store_true", help="force deterministic reductions")
        sp.add_argument("--mesh-level", type=int, default=None, help="override the mesh level")
        sp.add_argument("--workers", type=int, default=None, help="worker threads")
    rp = sub.add_parser("replay", help="re-run a report and byte-compare its CSV artifacts")
    rp.add_argument("report", help="report.json of an earlier run")
    rp.add_argument("--out", default=None)
    rp.add_argument("--workers", type=int, default=None)
    sub.add_parser("list", help="list registry contents")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            print(list_registries())
            return EXIT_PASS
        if args.command == "replay":
            rep = replay(args.report, args.out, args.workers)
            print(f"replay reproduced {len(rep.artifacts)} artifacts")
            return rep.exit_code
        cfg = load_config(args.config)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("must be >= 1", "workers")
        rep = run(cfg, args.out, args.mesh_level, args.workers, True if args.deterministic else None,
                  subcommand=args.command)
        out = Path(args.out if args.out is not None else cfg["output_dir"])
        for c in rep.checks:
            status = "PASS" if c.passed else ("DIVERGED" if c.diverged else "FAIL")
            print(f"{status:8s} {c.name}" + (f"  ({c.error})" if c.error else ""))
        print(f"exit code {rep.exit_code}; report in {out / 'report.json'}")
        return rep.exit_code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonReproducible as exc:
        print(f"not reproducible: {exc}", file=sys.stderr)
        return EXIT_FAIL

