"""Discrete p-harmonic maps under low-regularity metrics on the unit disk,
with a harness that measures the associated regularity estimates."""

from .energy import EnergyParams, energy, first_variation, total_energy, weak_residual_norm
from .grid import TriMesh, VectorField, ball_region, build_annulus_mesh, build_disk_mesh, interpolate
from .metric import MetricField, closed_form_metric, constant_metric, identity_metric
from .solver import DirichletProblem, pharmonic_extension, solve_critical, solve_dirichlet

__version__ = "0.1.0"

__all__ = [
    "DirichletProblem", "EnergyParams", "MetricField", "TriMesh", "VectorField", "ball_region",
    "build_annulus_mesh", "build_disk_mesh", "closed_form_metric", "constant_metric", "energy",
    "first_variation", "identity_metric", "interpolate", "pharmonic_extension", "solve_critical",
    "solve_dirichlet", "total_energy", "weak_residual_norm",
]
