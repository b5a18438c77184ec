"""Discrete p-energy with a metric, its first variation and Hessian.

On each element ``T`` with centroid ``c`` the regularised energy density is

    area(T) * sqrt(det g(c)) * (g^{ab}(c) <d_a v, d_b v> + mu^2)^(p/2)

which is exact for P1 fields and a constant metric.  ``mu = 0`` gives the
true energy; ``mu > 0`` lifts the degeneracy at vanishing gradients for the
solver.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import EmptyRegion, ShapeMismatch
from .grid import BallRegion, VectorField
from .metric import MetricField
from .parallel import scatter_add


@dataclass(frozen=True)
class EnergyParams:
    p: float = 2.0
    N: int = 1
    mu: float = 0.0
    Gamma: float = 0.0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.N < 1:
            raise ValueError("target dimension N must be >= 1")
        if self.mu < 0 or self.Gamma < 0:
            raise ValueError("mu and Gamma must be non-negative")

    def with_mu(self, mu: float) -> "EnergyParams":
        return EnergyParams(self.p, self.N, mu, self.Gamma)


@dataclass
class EnergyReport:
    total: float
    per_element: np.ndarray = field(repr=False)
    residual_norm: float
    p: float
    mu: float
    mesh_hash: str

    def to_json(self) -> str:
        return json.dumps({"total": self.total, "residual_norm": self.residual_norm,
                           "p": self.p, "mu": self.mu, "mesh_hash": self.mesh_hash}, sort_keys=True)


def _check(v: VectorField, g: MetricField, params: EnergyParams):
    if v.target_dim != params.N:
        raise ShapeMismatch(f"field has {v.target_dim} components, params.N = {params.N}")
    if g.dim != 2:
        raise ShapeMismatch("the mesh is two-dimensional but the metric is not")


def _local(v: VectorField, g: MetricField, mu: float):
    """Per-element metric data, gradients and |grad v|_g^2 + mu^2."""
    g_inv, sqrt_det = v.mesh.metric_data(g)
    q = v.gradients
    gq = np.einsum("tab,tbj->taj", g_inv, q)
    s = np.einsum("taj,taj->t", q, gq) + mu * mu
    w = v.mesh.areas * sqrt_det
    return q, gq, s, w


def energy_density(v: VectorField, g: MetricField, params: EnergyParams) -> np.ndarray:
    """Per-element energy contributions."""
    _check(v, g, params)
    _, _, s, w = _local(v, g, params.mu)
    return w * s ** (params.p / 2.0)


def energy(v: VectorField, g: MetricField, params: EnergyParams) -> EnergyReport:
    per = energy_density(v, g, params)
    return EnergyReport(
        total=math.fsum(per),
        per_element=per,
        residual_norm=weak_residual_norm(v, g, params),
        p=params.p,
        mu=params.mu,
        mesh_hash=v.mesh.content_hash,
    )


def total_energy(v: VectorField, g: MetricField, params: EnergyParams) -> float:
    return math.fsum(energy_density(v, g, params))


def _flux(v, g, params, mu):
    q, gq, s, w = _local(v, g, mu)
    coef = w * s ** ((params.p - 2.0) / 2.0)
    return coef[:, None, None] * gq


def _assemble_nodal(v: VectorField, flux: np.ndarray) -> np.ndarray:
    B = v.mesh.shape_gradients
    local = np.einsum("tka,taj->tkj", B, flux)
    return scatter_add(v.mesh.triangles.ravel(), local.reshape(-1, flux.shape[2]), v.mesh.n_vertices)


def first_variation(v: VectorField, g: MetricField, params: EnergyParams) -> np.ndarray:
    """Gradient of the discrete regularised energy w.r.t. nodal values, shape (nv, N).

    At ``mu = 0`` and ``p > 2`` elements with zero gradient contribute nothing.
    """
    _check(v, g, params)
    return params.p * _assemble_nodal(v, _flux(v, g, params, params.mu))


def weak_form(v: VectorField, g: MetricField, params: EnergyParams, mu: float = 0.0) -> np.ndarray:
    """Nodal values of  int |dv|_g^{p-2} g^{ab} <d_a v, d_b phi_k> dvol_g  (no factor p)."""
    _check(v, g, params)
    return _assemble_nodal(v, _flux(v, g, params, mu))


def gradient_lp_norm(v: VectorField, g: MetricField, p: float) -> float:
    _, _, s, w = _local(v, g, 0.0)
    return math.fsum(w * s ** (p / 2.0)) ** (1.0 / p)


def _hat_norms(mesh, g, p):
    """||grad phi_k||_{L^p(g)} for every hat function."""
    g_inv, sqrt_det = mesh.metric_data(g)
    B = mesh.shape_gradients
    sq = np.einsum("tka,tab,tkb->tk", B, g_inv, B)
    contrib = (mesh.areas * sqrt_det)[:, None] * sq ** (p / 2.0)
    return scatter_add(mesh.triangles.ravel(), contrib.reshape(-1, 1), mesh.n_vertices)[:, 0] ** (1.0 / p)


def relative_residual(v: VectorField, g: MetricField, params: EnergyParams, mu: float = 0.0,
                      test_set=None) -> float:
    res = weak_form(v, g, params, mu)
    idx = v.mesh.interior_vertices if test_set is None else np.asarray(test_set)
    if len(idx) == 0:
        return 0.0
    gnorm = gradient_lp_norm(v, g, params.p)
    # a gradient at rounding level of the values counts as a constant field
    ref = np.abs(v.nodal_values).max() * v.mesh.area ** (1.0 / params.p) / max(float(np.ptp(v.mesh.vertices, axis=0).max()), 1e-300)
    if gnorm <= 1e-13 * ref or gnorm == 0.0:
        return 0.0
    scale = gnorm ** (params.p - 1.0)
    hat = _hat_norms(v.mesh, g, params.p)[idx]
    return float(np.max(np.linalg.norm(res[idx], axis=1) / hat) / scale)


def weak_residual_norm(v: VectorField, g: MetricField, params: EnergyParams, test_set=None) -> float:
    """Relative dual norm of the discrete weak residual at ``mu = 0``.

    ``max_k |<R(v), phi_k>| / (||grad phi_k||_p ||grad v||_p^{p-1})`` over
    interior hat functions ``phi_k`` (vector-valued tests ``phi_k Z`` with
    ``|Z| = 1``).  By Hölder's inequality the value is O(1) for any field and
    vanishes exactly for discrete solutions; it is invariant under scaling of
    ``v``.  Fields whose gradient is at rounding level relative to their
    values count as constants and get residual 0.
    """
    return relative_residual(v, g, params, 0.0, test_set)


def localized_energy(v: VectorField, g: MetricField, params: EnergyParams, region: BallRegion) -> float:
    if region.mesh is not v.mesh:
        raise ShapeMismatch("region and field live on different meshes")
    idx = region.support
    if len(idx) == 0:
        raise EmptyRegion("empty region")
    per = energy_density(v, g, params)
    return math.fsum(region.element_weights[idx] * per[idx])


# ---------------------------------------------------------------------------
# Hessian
# ---------------------------------------------------------------------------


def _sparsity(mesh, N):
    dof = (mesh.triangles[:, :, None] * N + np.arange(N)).reshape(len(mesh.triangles), 3 * N)
    rows = np.repeat(dof, 3 * N, axis=1).ravel()
    cols = np.tile(dof, (1, 3 * N)).ravel()
    return rows, cols


def energy_hessian(v: VectorField, g: MetricField, params: EnergyParams) -> sp.csr_matrix:
    """Hessian of the regularised energy, dofs ordered ``vertex * N + component``."""
    _check(v, g, params)
    p, N = params.p, v.target_dim
    q, gq, s, w = _local(v, g, params.mu)
    B = v.mesh.shape_gradients
    g_inv, _ = v.mesh.metric_data(g)
    k1 = np.einsum("tka,tab,tlb->tkl", B, g_inv, B)
    c1 = w * p * s ** ((p - 2.0) / 2.0)
    # local dof (k, j); H[t, k, j, l, m]
    H = (c1[:, None, None] * k1)[:, :, None, :, None] * np.eye(N)[None, None, :, None, :]
    if p != 2.0:
        y = np.einsum("tka,taj->tkj", B, gq)
        with np.errstate(divide="ignore", invalid="ignore"):
            c2 = w * p * (p - 2.0) * s ** ((p - 4.0) / 2.0)
        c2 = np.where(s > 0, c2, 0.0)
        H = H + c2[:, None, None, None, None] * y[:, :, :, None, None] * y[:, None, None, :, :]
    rows, cols = _sparsity(v.mesh, N)
    n = v.mesh.n_vertices * N
    return sp.csr_matrix((H.reshape(-1), (rows, cols)), shape=(n, n))


def stiffness_matrix(mesh, g: MetricField) -> sp.csr_matrix:
    """Scalar P1 matrix  int g^{ab} d_a phi_k d_b phi_l dvol_g."""
    g_inv, sqrt_det = mesh.metric_data(g)
    B = mesh.shape_gradients
    k = np.einsum("tka,tab,tlb->tkl", B, g_inv, B) * (mesh.areas * sqrt_det)[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((k.ravel(), (rows, cols)), shape=(n, n))
