"""Discrete p-harmonic extensions, constant-metric change of variables and the
critical-system fixed-point iteration.

All solves eliminate the Dirichlet dofs and work on interior nodal values
only.  The nonlinear problems are minimised by damped Newton on the
regularised energy, continued in ``mu``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import (EnergyParams, energy_hessian, first_variation, relative_residual,
                     stiffness_matrix, total_energy, weak_residual_norm)
from .errors import MetricNotSPD, RegionTooCoarse, ShapeMismatch, SolveDiverged, UnsupportedExponentCombo
from .grid import BallRegion, TriMesh, VectorField, point_set_diameter
from .metric import MetricField, constant_metric, freeze, identity_metric, spd_decompose
from .parallel import scatter_add

log = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MU_SCHEDULE = tuple(10.0 ** -k for k in range(1, 9))
STAGE_TOLERANCE = 1e-6
SMALL_DATA = 0.1


@dataclass
class DirichletProblem:
    """Minimise ``E_g`` on ``mesh`` with ``v = boundary_values`` on boundary vertices.

    ``boundary_values`` has one row per entry of ``mesh.boundary_vertices``.
    """

    mesh: TriMesh
    metric: MetricField
    params: EnergyParams
    boundary_values: np.ndarray

    def __post_init__(self):
        bv = np.asarray(self.boundary_values, dtype=float)
        if bv.ndim == 1:
            bv = bv[:, None]
        nb = len(self.mesh.boundary_vertices)
        if bv.shape != (nb, self.params.N):
            raise ShapeMismatch(
                f"boundary data of shape {bv.shape}, expected ({nb}, {self.params.N})")
        self.boundary_values = bv

    @classmethod
    def from_function(cls, mesh: TriMesh, metric: MetricField, params: EnergyParams,
                      func: Callable[[np.ndarray], np.ndarray]) -> "DirichletProblem":
        vals = np.asarray(func(mesh.vertices[mesh.boundary_vertices]), dtype=float)
        return cls(mesh, metric, params, vals.reshape(len(vals), -1))


@dataclass
class SolveReport:
    field: VectorField
    iterations: int
    final_mu: float
    residual_norm: float
    energy_value: float
    converged: bool
    tolerance: float = DEFAULT_TOLERANCE
    harmonic_energy: float = math.nan
    contraction: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"iterations": self.iterations, "final_mu": self.final_mu,
                "residual_norm": self.residual_norm, "energy_value": self.energy_value,
                "converged": self.converged, "tolerance": self.tolerance,
                "harmonic_energy": self.harmonic_energy,
                "contraction": list(self.contraction), "distances": list(self.distances)}


def _interior_dofs(mesh, N):
    return (mesh.interior_vertices[:, None] * N + np.arange(N)).ravel()


def harmonic_extension(mesh: TriMesh, g: MetricField, boundary_values) -> np.ndarray:
    """Nodal values of the ``p = 2`` extension of the boundary data (componentwise)."""
    bv = np.asarray(boundary_values, dtype=float)
    bv = bv.reshape(len(bv), -1)
    K = stiffness_matrix(mesh, g)
    ii, bb = mesh.interior_vertices, mesh.boundary_vertices
    u = np.zeros((mesh.n_vertices, bv.shape[1]))
    u[bb] = bv
    if len(ii):
        rhs = -(K[ii][:, bb] @ bv)
        lu = spla.splu(sp.csc_matrix(K[ii][:, ii]))
        u[ii] = lu.solve(np.asarray(rhs).reshape(len(ii), -1))
    return u


def _newton_stage(v, g, params, idofs, stage_tol, budget):
    """Damped Newton at fixed ``params.mu``; returns (field, used iterations, residual)."""
    N = params.N
    used = 0
    res = relative_residual(v, g, params, params.mu)
    while res > stage_tol and used < budget:
        used += 1
        vals = v.nodal_values.ravel()
        grad = first_variation(v, g, params).ravel()[idofs]
        H = energy_hessian(v, g, params)[idofs][:, idofs]
        direction = None
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                d = spla.spsolve(sp.csc_matrix(H), -grad)
            if np.all(np.isfinite(d)) and float(grad @ d) < 0:
                direction = d
        except (RuntimeError, spla.MatrixRankWarning):
            pass
        if direction is None:
            log.debug("Newton direction rejected, falling back to steepest descent")
            scale = max(float(np.abs(H.diagonal()).max()), 1e-300)
            direction = -grad / scale
        e0 = total_energy(v, g, params)
        slope = float(grad @ direction)
        t = 1.0
        accepted = None
        for _ in range(60):
            trial = vals.copy()
            trial[idofs] += t * direction
            cand = v.with_values(trial.reshape(-1, N))
            e1 = total_energy(cand, g, params)
            if e1 <= e0 + 1e-4 * t * slope:
                accepted = cand
                break
            t *= 0.5
        if accepted is None:
            # energy is flat to rounding; keep the full step only if it helps the residual
            trial = vals.copy()
            trial[idofs] += direction
            cand = v.with_values(trial.reshape(-1, N))
            r_new = relative_residual(cand, g, params, params.mu)
            if r_new < res:
                v, res = cand, r_new
                continue
            break
        v = accepted
        res = relative_residual(v, g, params, params.mu)
    return v, used, res


def solve_dirichlet(problem: DirichletProblem, tolerance: float = DEFAULT_TOLERANCE,
                    max_iterations: int = 200, mu_schedule: Optional[Sequence[float]] = None,
                    initial: Optional[np.ndarray] = None) -> SolveReport:
    """Discrete p-harmonic extension of the boundary data.

    The harmonic extension is the starting point; for ``p > 2`` damped Newton
    is continued along ``mu_schedule`` (default ``1e-1, ..., 1e-8``) and then
    polished at ``mu = 0`` residual level.  With a warm start ``initial`` the
    continuation is skipped and Newton runs directly at the last ``mu``.

    ``residual_norm`` is the relative weak residual at ``mu = 0`` (see
    :func:`weak_residual_norm`).

    Raises
    ------
    SolveDiverged
        When the residual is still above ``tolerance`` after
        ``max_iterations`` Newton steps; the best iterate is attached.
    """
    mesh, g, params = problem.mesh, problem.metric, problem.params
    N, p = params.N, params.p
    bb = mesh.boundary_vertices
    idofs = _interior_dofs(mesh, N)
    harmonic = harmonic_extension(mesh, g, problem.boundary_values)
    flat = params.with_mu(0.0)
    e_harm = total_energy(VectorField(mesh, harmonic), g, flat)

    schedule = list(DEFAULT_MU_SCHEDULE if mu_schedule is None else mu_schedule)
    if initial is not None:
        start = np.array(initial, dtype=float).reshape(mesh.n_vertices, N)
        start[bb] = problem.boundary_values
        v = VectorField(mesh, start)
        stages = schedule[-1:] if schedule else [0.0]
    else:
        v = VectorField(mesh, harmonic)
        stages = schedule if schedule else [0.0]
    iterations = 0
    final_mu = 0.0
    if weak_residual_norm(v, g, flat) <= tolerance:
        stages = []
    elif p == 2.0:
        # the harmonic extension is the exact discrete minimiser
        v = VectorField(mesh, harmonic)
        stages = []
    for k, mu in enumerate(stages):
        last = k == len(stages) - 1
        stage_tol = tolerance if last else max(tolerance, STAGE_TOLERANCE)
        v, used, _ = _newton_stage(v, g, params.with_mu(mu), idofs, stage_tol,
                                   max_iterations - iterations)
        iterations += used
        final_mu = mu
        if last and weak_residual_norm(v, g, flat) > tolerance and iterations < max_iterations:
            # the last stage is judged at mu = 0
            v, used, _ = _newton_stage(v, g, flat, idofs, tolerance, max_iterations - iterations)
            iterations += used
            if used:
                final_mu = 0.0
    residual = weak_residual_norm(v, g, flat)
    report = SolveReport(
        field=v, iterations=iterations, final_mu=final_mu, residual_norm=residual,
        energy_value=total_energy(v, g, flat), converged=residual <= tolerance,
        tolerance=tolerance, harmonic_energy=e_harm,
    )
    if not report.converged:
        raise SolveDiverged(
            f"residual {residual:.3e} above tolerance {tolerance:.1e} after {iterations} iterations",
            best=report)
    return report


# ---------------------------------------------------------------------------
# constant metrics
# ---------------------------------------------------------------------------


@dataclass
class FlatTransform:
    """``w(y) = v(sqrt(g0)^{-1} y)`` on the image mesh ``sqrt(g0) * mesh``."""

    field: VectorField
    energy_flat: float
    energy_metric: float
    discrepancy: float
    resampling_error: float
    sqrt_g0: np.ndarray


def _constant_matrix(g0) -> np.ndarray:
    if isinstance(g0, MetricField):
        if g0.kind != "constant":
            raise ValueError("flat_transform needs a constant metric")
        mat = np.asarray(g0(np.zeros((1, g0.dim))))[0]
    else:
        mat = np.asarray(g0, dtype=float)
    return mat


def flat_transform(v: VectorField, g0, p: float = 2.0) -> FlatTransform:
    """Change of variables turning the constant metric ``g0`` into the flat one.

    The image mesh is the linear image of ``v``'s mesh under ``sqrt(g0)``, so
    ``w`` carries the same nodal values.  For P1 fields the energy identity
    ``E_{g0}(v) = E_flat(w)`` then holds element by element, and
    ``resampling_error`` is the observed relative mismatch (rounding level).
    """
    mat = _constant_matrix(g0)
    arr = spd_decompose(mat[None])
    if arr.eigvals.min() <= 1e-12 * arr.eigvals.max():
        raise MetricNotSPD("image domain is degenerate")
    root = arr.sqrt_g()[0]
    image = v.mesh.mapped(root, name=f"{v.mesh.name}/flat")
    w = VectorField(image, v.nodal_values.copy())
    N = v.target_dim
    e_metric = total_energy(v, constant_metric(mat), EnergyParams(p=p, N=N))
    e_flat = total_energy(w, identity_metric(), EnergyParams(p=p, N=N))
    disc = abs(e_metric - e_flat) / e_metric if e_metric > 0 else abs(e_flat)
    return FlatTransform(w, e_flat, e_metric, disc, disc, root)


def pharmonic_extension(v: VectorField, region: BallRegion, g0: Optional[MetricField] = None,
                        params: Optional[EnergyParams] = None, tolerance: float = DEFAULT_TOLERANCE,
                        metric: Optional[MetricField] = None, max_iterations: int = 200) -> SolveReport:
    """p-harmonic extension of ``v`` from the boundary of the region into it.

    The sub-mesh is the union of the elements whose centroids lie in the ball;
    the boundary trace is the restriction of ``v`` to its boundary vertices.
    ``g0`` defaults to ``metric`` frozen at the ball center.  The solve is
    warm started from ``v`` itself.

    ``report.extra`` holds the sub-mesh, the parent vertex/element ids, the
    restriction of ``v`` and its ``g0``-energy.
    """
    if params is None:
        params = EnergyParams(p=2.0, N=v.target_dim)
    if g0 is None:
        if metric is None:
            raise ValueError("pass g0 or the ambient metric to freeze")
        g0 = freeze(metric, region.center)
    mask = region.centroid_mask()
    if not mask.any():
        raise RegionTooCoarse("no element centroid inside the ball")
    sub, verts, elems = v.mesh.submesh(mask)
    if len(sub.interior_vertices) < 10:
        raise RegionTooCoarse(
            f"only {len(sub.interior_vertices)} interior vertices in ball of radius {region.radius:g}")
    restricted = VectorField(sub, v.nodal_values[verts])
    problem = DirichletProblem(sub, g0, params, restricted.nodal_values[sub.boundary_vertices])
    try:
        report = solve_dirichlet(problem, tolerance, max_iterations, initial=restricted.nodal_values)
    except SolveDiverged as exc:
        raise SolveDiverged(
            f"extension on ball {region.center.tolist()} r={region.radius:g}: {exc}", best=exc.best) from exc
    report.extra.update(submesh=sub, parent_vertices=verts, parent_elements=elems,
                        restricted=restricted, g0=g0,
                        restricted_energy=total_energy(restricted, g0, params.with_mu(0.0)))
    return report


# ---------------------------------------------------------------------------
# critical system  Delta_{g,n} u = f(u, grad u)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalRHS:
    """Right-hand side ``f(u, grad u)`` with ``|f| <= Gamma |grad u|_g^n``.

    ``evaluate`` receives element-centroid values ``u`` (nt, N), gradients
    (nt, n, N) and ``g^{-1}`` (nt, n, n).
    """

    tag: str
    Gamma: float
    params: dict
    func: Callable

    def evaluate(self, u, grad, g_inv) -> np.ndarray:
        norm2 = np.einsum("taj,tab,tbj->t", grad, g_inv, grad)
        n = grad.shape[1]
        return self.func(u, norm2 ** (n / 2.0))

    def to_json(self) -> dict:
        return {"tag": self.tag, "Gamma": self.Gamma, "params": dict(self.params)}


def _zero(Gamma=0.0, **_):
    return CriticalRHS("zero", 0.0, {}, lambda u, gn: np.zeros_like(u))


def _directional_growth(Gamma=0.05, direction=None, **_):
    def func(u, gn):
        e = np.zeros(u.shape[1]) if direction is None else np.asarray(direction, dtype=float)
        if direction is None:
            e[0] = 1.0
        e = e / np.linalg.norm(e)
        return Gamma * gn[:, None] * e[None, :]
    return CriticalRHS("directional_growth", float(Gamma),
                       {"direction": None if direction is None else list(direction)}, func)


def _unit_vector_saturating(Gamma=0.05, **_):
    def func(u, gn):
        return Gamma * gn[:, None] * u / np.sqrt(1.0 + np.sum(u * u, axis=1, keepdims=True))
    return CriticalRHS("unit_vector_saturating", float(Gamma), {}, func)


RHS_FAMILIES = {
    "directional_growth": _directional_growth,
    "unit_vector_saturating": _unit_vector_saturating,
    "zero": _zero,
}


def critical_rhs(tag: str, **params) -> CriticalRHS:
    if tag not in RHS_FAMILIES:
        raise ValueError(f"unknown critical right-hand side {tag!r}")
    return RHS_FAMILIES[tag](**params)


def rhs_families() -> list[str]:
    return sorted(RHS_FAMILIES)


def w1n_distance(a: VectorField, b: VectorField, n: float = 2.0) -> float:
    """``(int |a-b|^n + int |grad(a-b)|^n)^{1/n}`` with vertex-lumped values, flat measure."""
    if a.mesh is not b.mesh:
        raise ShapeMismatch("fields live on different meshes")
    diff = a.nodal_values - b.nodal_values
    mesh = a.mesh
    lumped = scatter_add(mesh.triangles.ravel(), np.repeat(mesh.areas / 3.0, 3)[:, None], mesh.n_vertices)[:, 0]
    val = lumped * np.sum(diff * diff, axis=1) ** (n / 2.0)
    dg = b.with_values(diff).gradients
    grad = mesh.areas * np.einsum("taj,taj->t", dg, dg) ** (n / 2.0)
    return (math.fsum(val) + math.fsum(grad)) ** (1.0 / n)


def _load_vector(mesh, g, rhs, u: VectorField):
    g_inv, sqrt_det = mesh.metric_data(g)
    uc = u.nodal_values[mesh.triangles].mean(axis=1)
    f = rhs.evaluate(uc, u.gradients, g_inv)
    local = (mesh.areas * sqrt_det / 3.0)[:, None] * f
    return scatter_add(mesh.triangles.ravel(), np.repeat(local, 3, axis=0), mesh.n_vertices)


def solve_critical(mesh: TriMesh, g: MetricField, rhs: CriticalRHS, boundary_values,
                   params: Optional[EnergyParams] = None, tolerance: float = DEFAULT_TOLERANCE,
                   max_outer: int = 50) -> SolveReport:
    """Picard iteration for ``Delta_{g,2} u = f(u, grad u)`` with Dirichlet data.

    Each step solves the linear problem
    ``min (1/2) E_g(v) - int f(u_k, grad u_k) . v dvol_g``
    whose Euler-Lagrange equation is the weak form with ``f`` frozen at
    ``u_k``.  Convergence is declared once the W^{1,2} distance between
    successive iterates drops below ``tolerance``.

    Raises
    ------
    UnsupportedExponentCombo
        Unless ``p = n = 2``.
    SolveDiverged
        When the distance grows three outer steps in a row, or at
        ``max_outer`` without convergence.
    """
    if params is None:
        params = EnergyParams(p=2.0, N=np.asarray(boundary_values).reshape(len(mesh.boundary_vertices), -1).shape[1])
    if params.p != 2.0 or g.dim != 2:
        raise UnsupportedExponentCombo(f"the critical system is implemented for p = n = 2, got p = {params.p}")
    problem = DirichletProblem(mesh, g, params, boundary_values)
    bv = problem.boundary_values
    osc = point_set_diameter(bv)
    if rhs.Gamma * osc > SMALL_DATA:
        warnings.warn(f"Gamma * osc(boundary) = {rhs.Gamma * osc:.3g} exceeds {SMALL_DATA}; "
                      "the fixed-point iteration may diverge", RuntimeWarning, stacklevel=2)
    K = stiffness_matrix(mesh, g)
    ii, bb = mesh.interior_vertices, mesh.boundary_vertices
    lu = spla.splu(sp.csc_matrix(K[ii][:, ii]))
    Kib = K[ii][:, bb]
    lift = -(Kib @ bv)

    def step(load):
        vals = np.zeros((mesh.n_vertices, params.N))
        vals[bb] = bv
        if len(ii):
            vals[ii] = lu.solve(np.asarray(lift + load[ii]).reshape(len(ii), -1))
        return VectorField(mesh, vals)

    u = step(np.zeros((mesh.n_vertices, params.N)))
    e_harm = total_energy(u, g, params)
    distances, contraction = [], []
    growth = 0
    converged = False
    it = 0
    for it in range(1, max_outer + 1):
        nxt = step(_load_vector(mesh, g, rhs, u))
        d = w1n_distance(nxt, u, 2.0)
        if distances:
            contraction.append(d / distances[-1] if distances[-1] > 0 else 0.0)
            growth = growth + 1 if d > distances[-1] else 0
        distances.append(d)
        u = nxt
        if d <= tolerance:
            converged = True
            break
        if growth >= 3:
            break
    report = SolveReport(
        field=u, iterations=it, final_mu=0.0,
        residual_norm=distances[-1] if distances else 0.0,
        energy_value=total_energy(u, g, params), converged=converged, tolerance=tolerance,
        harmonic_energy=e_harm, contraction=contraction, distances=distances,
        extra={"rhs": rhs.to_json(), "boundary_oscillation": osc},
    )
    if not converged:
        why = "distance increased three times in a row" if growth >= 3 else f"no convergence in {max_outer} steps"
        raise SolveDiverged(f"critical iteration diverged: {why}", best=report)
    return report
