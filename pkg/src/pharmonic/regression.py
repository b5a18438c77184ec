"""Pinned regression values and the scenarios that produce them.

``python -m pharmonic.regression`` recomputes every scenario and rewrites
``fixtures/regression.json`` together with provenance metadata.  Tests load
the file and compare fresh computations against it.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import platform
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import boundary as bd
from .energy import EnergyParams
from .grid import ball_region, build_annulus_mesh, build_disk_mesh, dyadic_hierarchy
from .harness import campanato_sequence, comparison_series, hessian_quotient, morrey_decay
from .metric import closed_form_metric, identity_metric
from .solver import DirichletProblem, critical_rhs, solve_critical, solve_dirichlet

FIXTURE_FILE = "regression.json"
COMPARISON_RADII = (0.4, 0.2, 0.1, 0.05)
MORREY_RADII = (0.4, 0.2, 0.1, 0.05)


def comparison_scenario(level: int = 6):
    """Frozen-metric comparison for a conformal metric, p = 3, affine data."""
    metric = closed_form_metric("conformal_sin", eps=0.1, k=1.0)
    params = EnergyParams(p=3.0, N=1)
    mesh = build_disk_mesh(level)
    sol = solve_dirichlet(DirichletProblem.from_function(mesh, metric, params, bd.affine([[1.0, 0.5]])),
                          tolerance=1e-10)
    return comparison_series(sol.field, (0.0, 0.0), COMPARISON_RADII, metric, params,
                             beta=0.99, tolerance=1e-10)


def radial_solution(level: int = 6, tolerance: float = 1e-10):
    """p = 4 solve on the annulus with the radial profile as data on both circles."""
    mesh = build_annulus_mesh(level, 0.25)
    data = bd.radial_pfundamental(p=4.0)
    return solve_dirichlet(DirichletProblem.from_function(mesh, identity_metric(), EnergyParams(p=4.0), data),
                           tolerance=tolerance)


def campanato_scenario(level: int = 6):
    sol = radial_solution(level)
    hier = dyadic_hierarchy(sol.field.mesh, (0.6, 0.0), 0.3, 0.5, 4)
    return campanato_sequence(sol.field, hier, EnergyParams(p=4.0))


def morrey_scenario(level: int = 6):
    """p = n = 2 solution under a metric close to a constant."""
    metric = closed_form_metric("conformal_sin", eps=0.05, k=1.0)
    params = EnergyParams(p=2.0, N=2)
    mesh = build_disk_mesh(level)
    sol = solve_dirichlet(DirichletProblem.from_function(mesh, metric, params, bd.random_trig(seed=7, N=2)))
    return morrey_decay(sol.field, (0.0, 0.0), MORREY_RADII, params, metric)


def critical_scenario(level: int = 5):
    """Gamma = 0.05, affine data of slope 0.1, flat metric."""
    mesh = build_disk_mesh(level)
    data = bd.affine([[0.1, 0.0], [0.0, 0.1]])
    return solve_critical(mesh, identity_metric(), critical_rhs("directional_growth", Gamma=0.05),
                          data(mesh.vertices[mesh.boundary_vertices]), EnergyParams(p=2.0, N=2))


def hessian_scenario(level: int = 6):
    """Difference quotients of a converged p = 3 solution, flat metric."""
    g = identity_metric()
    mesh = build_disk_mesh(level)
    params = EnergyParams(p=3.0, N=2)
    sol = solve_dirichlet(DirichletProblem.from_function(mesh, g, params, bd.random_trig(seed=3, N=2)))
    ball = ball_region(mesh, (0.1, 0.0), 0.25)
    return hessian_quotient(sol.field, g, ball, params, [8 * mesh.h, 4 * mesh.h, 2 * mesh.h])


def compute_fixtures() -> dict:
    comp = comparison_scenario()
    camp = campanato_scenario()
    mor = morrey_scenario()
    crit = critical_scenario()
    hess = hessian_scenario()
    values = {
        "comparison_slope": {"value": comp.fit.slope, "rtol": 1e-6},
        "comparison_fit_residual": {"value": comp.fit.residual, "rtol": 1e-6},
        "radial_campanato_exponent": {"value": camp.fitted_exponent, "rtol": 1e-6},
        "morrey_slope": {"value": mor.exponent, "rtol": 1e-6},
        "critical_iterations": {"value": crit.iterations, "rtol": 0.0},
        "hessian_extrapolated_limit": {"value": hess.extrapolated_limit, "rtol": 1e-6},
        "hessian_bound_factor": {"value": hess.bound_factor, "rtol": 1e-6},
        "hessian_empirical_constant": {"value": hess.empirical_constant, "rtol": 1e-6},
    }
    return {
        "provenance": {
            "generator": "python -m pharmonic.regression",
            "generated": datetime.date.today().isoformat(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "scenarios": {
                "comparison_slope": "conformal_sin eps=0.1 k=1, p=3, affine (1, 0.5), level 6, radii 0.4..0.05",
                "radial_campanato_exponent": "annulus 0.25<r<1 level 6, p=4 radial profile, center (0.6,0) r0=0.3",
                "morrey_slope": "conformal_sin eps=0.05, p=n=2, random_trig seed 7, level 6",
                "critical_iterations": "directional_growth Gamma=0.05, affine slope 0.1, flat, level 5",
                "hessian": "p=3 random_trig seed 3, flat, level 6, ball (0.1,0) r=0.25, h = 8,4,2 mesh h",
            },
        },
        "values": values,
    }


def fixture_path() -> Path:
    return Path(str(resources.files("pharmonic") / "fixtures" / FIXTURE_FILE))


def load_fixtures() -> dict:
    with open(fixture_path()) as fh:
        return json.load(fh)


def pinned(name: str) -> tuple[float, float]:
    """(value, relative tolerance) of a pinned quantity."""
    entry = load_fixtures()["values"][name]
    return entry["value"], entry["rtol"]


def matches(name: str, measured: float) -> bool:
    value, rtol = pinned(name)
    return math.isclose(measured, value, rel_tol=rtol, abs_tol=1e-300) if rtol else measured == value


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Recompute the pinned regression values.")
    ap.add_argument("--out", type=Path, default=None, help="output file (default: packaged fixture)")
    args = ap.parse_args(argv)
    doc = compute_fixtures()
    out = args.out or fixture_path()
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
