"""Metric tensor fields on the unit ball.

A :class:`MetricField` wraps a vectorised evaluator ``points (m, n) -> (m, n, n)``
returning symmetric positive definite matrices.  Derived quantities (inverse,
square roots, volume density) are always obtained from a symmetric
eigendecomposition so that they are consistent to rounding error.

Matrix norms are operator norms (largest singular value) throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DegeneratePair, EmptySampleSet, MetricNotSPD, OutOfDomain

KINDS = ("constant", "Linfty", "holder", "C1")

# Slack used when deciding whether a point lies in the closed unit ball.
DOMAIN_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class MetricField:
    """Metric ``g`` on (a subset of) the unit ball of R^n.

    Parameters
    ----------
    evaluator : callable
        ``points (m, n) -> (m, n, n)``.
    dim : int
        Dimension ``n`` of the domain.
    kind : str
        One of ``constant``, ``Linfty``, ``holder``, ``C1``.
    gradient : callable, optional
        ``points (m, n) -> (m, n, n, n)`` with entry ``[.., k, a, b] = d_k g_ab``.
    holder_exponent : float, optional
        Declared Hölder exponent for ``holder`` kind fields.
    spec : dict, optional
        JSON document the field was built from (used for round-tripping).
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int = 2
    kind: str = "Linfty"
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    holder_exponent: Optional[float] = None
    name: str = ""
    spec: dict = field(default_factory=dict)
    domain_radius: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError("metric dimension must be >= 2")

    def _points(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.dim:
            raise ValueError(f"points of dimension {pts.shape[-1]} for a {self.dim}-dimensional metric")
        if self.domain_radius is not None:
            r = np.linalg.norm(pts, axis=1)
            if np.any(r > self.domain_radius + DOMAIN_SLACK):
                raise OutOfDomain(f"point at distance {r.max():.6g} from the origin")
        return pts

    def __call__(self, points) -> np.ndarray:
        """Evaluate at ``points`` (m, n); returns (m, n, n)."""
        pts = self._points(points)
        g = np.asarray(self.evaluator(pts), dtype=float)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    def grad(self, points) -> np.ndarray:
        if self.kind == "constant":
            pts = self._points(points)
            return np.zeros((len(pts), self.dim, self.dim, self.dim))
        if self.gradient is None:
            raise ValueError(f"metric {self.name or self.kind!r} has no gradient evaluator")
        return np.asarray(self.gradient(self._points(points)), dtype=float)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"


@dataclass(frozen=True)
class MetricSample:
    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: float
    sqrt_g: np.ndarray
    inv_sqrt_g: np.ndarray


@dataclass(frozen=True)
class EllipticityBounds:
    lam: float
    Lam: float
    sample_count: int

    # long-form aliases
    @property
    def lambda_(self) -> float:
        return self.lam

    @property
    def Lambda(self) -> float:
        return self.Lam


@dataclass(frozen=True)
class MetricArrays:
    """Batched eigen-derived metric data at a set of points."""

    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    def sqrt_g(self) -> np.ndarray:
        return _spectral(self.eigvecs, np.sqrt(self.eigvals))

    def inv_sqrt_g(self) -> np.ndarray:
        return _spectral(self.eigvecs, 1.0 / np.sqrt(self.eigvals))


def _spectral(vecs, vals):
    return np.einsum("...ik,...k,...jk->...ij", vecs, vals, vecs)


def spd_decompose(mats) -> MetricArrays:
    """Eigendecompose a stack of symmetric matrices, raising if one is not SPD."""
    g = np.asarray(mats, dtype=float)
    if g.ndim == 2:
        g = g[None]
    asym = np.abs(g - np.swapaxes(g, -1, -2)).max(axis=(-2, -1))
    scale = np.abs(g).max(axis=(-2, -1))
    if np.any(~np.isfinite(g)) or np.any(asym > 1e-12 * np.maximum(scale, 1e-300)):
        raise MetricNotSPD("metric matrix is not symmetric (or not finite)")
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    vals, vecs = np.linalg.eigh(g)
    if np.any(vals <= 0):
        raise MetricNotSPD(f"metric has a non-positive eigenvalue {vals.min():.3g}")
    g_inv = _spectral(vecs, 1.0 / vals)
    sqrt_det = np.sqrt(np.prod(vals, axis=-1))
    return MetricArrays(g=g, g_inv=g_inv, sqrt_det=sqrt_det, eigvals=vals, eigvecs=vecs)


def metric_arrays(field: MetricField, points) -> MetricArrays:
    return spd_decompose(field(points))


def eval_metric(field: MetricField, point) -> MetricSample:
    """Evaluate ``field`` at one point together with its derived quantities."""
    pt = np.asarray(point, dtype=float).reshape(-1)
    if pt.shape[0] != field.dim:
        raise ValueError("point dimension does not match the metric")
    arr = metric_arrays(field, pt[None])
    return MetricSample(
        point=pt,
        g=arr.g[0],
        g_inv=arr.g_inv[0],
        sqrt_det=float(arr.sqrt_det[0]),
        sqrt_g=arr.sqrt_g()[0],
        inv_sqrt_g=arr.inv_sqrt_g()[0],
    )


def ellipticity_bounds(field: MetricField, sample_points) -> EllipticityBounds:
    pts = np.asarray(sample_points, dtype=float)
    if pts.size == 0:
        raise EmptySampleSet("no sample points")
    arr = metric_arrays(field, pts)
    return EllipticityBounds(float(arr.eigvals.min()), float(arr.eigvals.max()), len(arr.eigvals))


def op_norm(mats) -> np.ndarray:
    """Largest singular value of each matrix in a stack."""
    return np.linalg.norm(np.asarray(mats, dtype=float), ord=2, axis=(-2, -1))


def holder_seminorm(field: MetricField, beta: float, sample_pairs) -> float:
    """Sampled lower bound of ``[g]_{C^{0,beta}}``: max |g(x)-g(y)| / |x-y|^beta."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    pairs = np.asarray(sample_pairs, dtype=float)
    if pairs.size == 0:
        raise EmptySampleSet("no sample pairs")
    pairs = pairs.reshape(-1, 2, field.dim)
    dist = np.linalg.norm(pairs[:, 0] - pairs[:, 1], axis=1)
    if np.any(dist == 0.0):
        raise DegeneratePair("coincident points in a Hölder pair")
    diff = op_norm(field(pairs[:, 0]) - field(pairs[:, 1]))
    return float(np.max(diff / dist**beta))


def distance_to_constant(field: MetricField, g0, sample_points) -> float:
    """Max over samples of |g-g0| + |id - g^{-1} g0| + |id - g g0^{-1}| (operator norms)."""
    g0 = np.asarray(g0, dtype=float)
    g0_inv = spd_decompose(g0).g_inv[0]
    pts = np.asarray(sample_points, dtype=float)
    if pts.size == 0:
        raise EmptySampleSet("no sample points")
    arr = metric_arrays(field, pts)
    eye = np.eye(field.dim)
    total = (
        op_norm(arr.g - g0)
        + op_norm(eye - arr.g_inv @ g0)
        + op_norm(eye - arr.g @ g0_inv)
    )
    return float(total.max())


def freeze(field: MetricField, point) -> MetricField:
    """Constant metric equal to ``field`` evaluated at ``point``."""
    if field.is_constant:
        return field
    g0 = eval_metric(field, point).g
    return constant_metric(g0)


# ---------------------------------------------------------------------------
# constructors and registry
# ---------------------------------------------------------------------------


def constant_metric(matrix) -> MetricField:
    g0 = np.array(matrix, dtype=float)
    if g0.ndim != 2 or g0.shape[0] != g0.shape[1]:
        raise MetricNotSPD("constant metric must be a square matrix")
    spd_decompose(g0)
    g0 = 0.5 * (g0 + g0.T)
    g0.setflags(write=False)
    n = g0.shape[0]

    def evaluator(pts):
        return np.broadcast_to(g0, (len(pts), n, n)).copy()

    return MetricField(
        evaluator,
        dim=n,
        kind="constant",
        name="constant",
        spec={"kind": "constant", "matrix": g0.tolist()},
        domain_radius=None,
    )


def identity_metric(n: int = 2) -> MetricField:
    """The flat metric."""
    return constant_metric(np.eye(n))


def _conformal(fn, dfn, dim, kind, name, spec, holder=None):
    eye = np.eye(dim)

    def evaluator(pts):
        return fn(pts)[:, None, None] * eye

    gradient = None
    if dfn is not None:
        def gradient(pts):
            return dfn(pts)[:, :, None, None] * eye

    return MetricField(evaluator, dim=dim, kind=kind, gradient=gradient,
                       holder_exponent=holder, name=name, spec=spec)


def _conformal_sin(eps=0.1, k=1.0, dim=2):
    if abs(eps) >= 1:
        raise ValueError("conformal_sin needs |eps| < 1")
    return _conformal(
        lambda x: 1.0 + eps * np.sin(k * np.pi * x[:, 0]),
        lambda x: np.eye(dim)[0][None, :] * (eps * k * np.pi * np.cos(k * np.pi * x[:, 0]))[:, None],
        dim, "C1", "conformal_sin",
        {"kind": "closed_form", "family": "conformal_sin", "params": {"eps": eps, "k": k, "dim": dim}},
    )


def _conformal_linear(a=0.5, dim=2):
    if abs(a) >= 1:
        raise ValueError("conformal_linear needs |a| < 1 to stay SPD on the ball")
    return _conformal(
        lambda x: 1.0 + a * x[:, 0],
        lambda x: np.broadcast_to(a * np.eye(dim)[0], x.shape).copy(),
        dim, "C1", "conformal_linear",
        {"kind": "closed_form", "family": "conformal_linear", "params": {"a": a, "dim": dim}},
    )


def _holder_radial(c=1.0, beta=0.5, dim=2):
    """g = (1 + c |x|^beta) id, exactly Hölder-beta at the origin."""
    if c <= -1:
        raise ValueError("holder_radial needs c > -1")
    return _conformal(
        lambda x: 1.0 + c * np.linalg.norm(x, axis=1) ** beta,
        None, dim, "holder", "holder_radial",
        {"kind": "closed_form", "family": "holder_radial", "params": {"c": c, "beta": beta, "dim": dim}},
        holder=beta,
    )


def _checkerboard(low=1.0, high=2.0, cell=0.25, dim=2):
    """Piecewise constant conformal factor on a square lattice of side ``cell``."""
    if low <= 0 or high <= 0:
        raise ValueError("checkerboard factors must be positive")

    def factor(x):
        parity = np.floor(x / cell).astype(int).sum(axis=1) % 2
        return np.where(parity == 0, low, high)

    return _conformal(
        factor, None, dim, "Linfty", "checkerboard",
        {"kind": "closed_form", "family": "checkerboard",
         "params": {"low": low, "high": high, "cell": cell, "dim": dim}},
    )


def _anisotropic_sin(eps=0.2, k=1.0):
    """Non-conformal C^1 metric in n = 2 with eigenvalues in [1 - eps, 1 + eps]."""
    if not 0 <= eps < 1:
        raise ValueError("anisotropic_sin needs 0 <= eps < 1")
    w = k * np.pi

    def parts(x):
        a = np.cos(w * x[:, 1]) / np.sqrt(2.0)
        b = np.sin(w * x[:, 0]) / np.sqrt(2.0)
        return a, b

    def evaluator(x):
        a, b = parts(x)
        g = np.empty((len(x), 2, 2))
        g[:, 0, 0] = 1 + eps * a
        g[:, 1, 1] = 1 - eps * a
        g[:, 0, 1] = g[:, 1, 0] = eps * b
        return g

    def gradient(x):
        da1 = -w * np.sin(w * x[:, 1]) / np.sqrt(2.0)
        db0 = w * np.cos(w * x[:, 0]) / np.sqrt(2.0)
        out = np.zeros((len(x), 2, 2, 2))
        out[:, 1, 0, 0] = eps * da1
        out[:, 1, 1, 1] = -eps * da1
        out[:, 0, 0, 1] = out[:, 0, 1, 0] = eps * db0
        return out

    return MetricField(evaluator, dim=2, kind="C1", gradient=gradient, name="anisotropic_sin",
                       spec={"kind": "closed_form", "family": "anisotropic_sin",
                             "params": {"eps": eps, "k": k}})


CLOSED_FORM_FAMILIES = {
    "anisotropic_sin": _anisotropic_sin,
    "checkerboard": _checkerboard,
    "conformal_linear": _conformal_linear,
    "conformal_sin": _conformal_sin,
    "holder_radial": _holder_radial,
}


def closed_form_metric(family: str, **params) -> MetricField:
    try:
        builder = CLOSED_FORM_FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown metric family {family!r}") from None
    return builder(**params)


def grid_metric(xs, ys, values) -> MetricField:
    """Bilinear interpolation of a 2x2 metric sampled on a lattice.

    ``values`` holds the matrix entries row-major with shape
    ``(len(xs), len(ys), 2, 2)`` (a flat list is reshaped).  Interpolated
    matrices are re-symmetrised; SPD-ness is checked wherever they are used.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    vals = np.asarray(values, dtype=float).reshape(len(xs), len(ys), 2, 2)
    spd_decompose(vals.reshape(-1, 2, 2))
    interp = RegularGridInterpolator((xs, ys), vals.reshape(len(xs), len(ys), 4),
                                     method="linear", bounds_error=False, fill_value=None)

    def evaluator(pts):
        return interp(pts).reshape(-1, 2, 2)

    return MetricField(evaluator, dim=2, kind="Linfty", name="grid",
                       spec={"kind": "grid", "x": xs.tolist(), "y": ys.tolist(),
                             "values": vals.reshape(-1).tolist()})


def metric_from_json(doc: dict) -> MetricField:
    """Build a metric from ``{"kind": "constant" | "closed_form" | "grid", ...}``."""
    kind = doc.get("kind")
    if kind == "constant":
        if "matrix" in doc:
            return constant_metric(doc["matrix"])
        n = int(doc.get("dim", 2))
        return constant_metric(float(doc.get("scale", 1.0)) * np.eye(n))
    if kind == "closed_form":
        return closed_form_metric(doc["family"], **doc.get("params", {}))
    if kind == "grid":
        return grid_metric(doc["x"], doc["y"], doc["values"])
    raise ValueError(f"unknown metric document kind {kind!r}")


def metric_to_json(field: MetricField) -> dict:
    if not field.spec:
        raise ValueError("metric was not built from a serialisable description")
    return dict(field.spec)


def metric_families() -> list[str]:
    return sorted(["constant", "grid", *CLOSED_FORM_FAMILIES])


def sample_grid(count: int = 32, radius: float = 1.0) -> np.ndarray:
    """Points of a ``count x count`` lattice on [-radius, radius]^2 inside the closed ball."""
    t = np.linspace(-radius, radius, count)
    xx, yy = np.meshgrid(t, t, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    return pts[np.linalg.norm(pts, axis=1) <= radius + 1e-12]


def comparability_ratio(field: MetricField, p: float, sample_points, directions: int = 64) -> float:
    """Sampled sup over y1, y2 and unit covectors z of |z|^p_{g(y1)} vol(y1) / |z|^p_{g(y2)} vol(y2)."""
    if field.dim != 2:
        raise ValueError("comparability_ratio samples directions in n = 2 only")
    arr = metric_arrays(field, sample_points)
    theta = np.linspace(0.0, math.pi, directions, endpoint=False)
    z = np.column_stack([np.cos(theta), np.sin(theta)])
    sq = np.einsum("da,mab,db->md", z, arr.g_inv, z)
    dens = sq ** (p / 2.0) * arr.sqrt_det[:, None]
    return float(np.max(dens.max(axis=0) / dens.min(axis=0)))
