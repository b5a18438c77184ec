"""Quantities that probe the regularity of solved fields.

Each function takes immutable solved fields and returns a record with the
measured values, a fitted exponent where meaningful (always paired with the
log-scale fit residual), and ``rows()`` / ``summary()`` for CSV and JSON
output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .energy import EnergyParams
from .errors import (DegenerateRegion, InsufficientScales, OutOfDomain,
                     RegionTooCoarse, ShapeMismatch, SolveDiverged, UnsupportedExponentCombo)
from .grid import (BallRegion, DyadicHierarchy, TriMesh, VectorField, ball_region, dyadic_hierarchy,
                   fmt, oscillation, point_set_diameter)
from .metric import MetricField, distance_to_constant, freeze, holder_seminorm
from .parallel import scatter_add
from .solver import DEFAULT_TOLERANCE, pharmonic_extension

INF_EXPONENT = math.inf
ROUNDOFF = 1e-12  # relative level below which a sequence counts as identically zero


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    residual: float

    @property
    def degenerate(self) -> bool:
        return not math.isfinite(self.slope)


def loglog_fit(x, y) -> LogLogFit:
    """Least-squares line through ``(log x, log y)``; ``residual`` is the RMS misfit."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 2:
        raise InsufficientScales("need at least two points to fit a slope")
    if np.any(x <= 0) or np.any(y <= 0):
        return LogLogFit(math.nan, math.nan, math.nan)
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return LogLogFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


def write_plot_csv(path, x, y, names=("x", "y")) -> None:
    """Two-column plot data."""
    write_csv(path, names, zip(np.asarray(x, dtype=float), np.asarray(y, dtype=float)))


def _sample_ball(center, r, count=12):
    """Lattice points of the closed ball."""
    t = np.linspace(-r, r, count)
    xx, yy = np.meshgrid(t, t, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    return np.asarray(center) + pts[np.linalg.norm(pts, axis=1) <= r * (1 + 1e-12)]


def _pairs(points, rng, count=400):
    i = rng.integers(0, len(points), count)
    j = rng.integers(0, len(points), count)
    keep = i != j
    return points[i[keep]], points[j[keep]]


def _grad_norm_p(grads, g_inv, p):
    """|q|_g^p per element for gradients (nt, n, N)."""
    s = np.einsum("taj,tab,tbj->t", grads, g_inv, grads)
    return np.maximum(s, 0.0) ** (p / 2.0)


# ---------------------------------------------------------------------------
# comparison with frozen-metric extensions
# ---------------------------------------------------------------------------


@dataclass
class ComparisonRecord:
    radius: float
    lhs: float
    rhs_factor: float
    ratio: float
    metric_seminorm_rbeta: float
    mode: str
    iterations: int = 0
    oscillation: float = math.nan

    def row(self) -> list:
        return [self.radius, self.lhs, self.rhs_factor, self.ratio, self.metric_seminorm_rbeta,
                self.oscillation]

    header = ["radius", "lhs", "rhs_factor", "ratio", "metric_seminorm_rbeta", "oscillation"]


def comparison_ratio(v: VectorField, ball: BallRegion, g: MetricField, params: EnergyParams,
                     mode: str = "holder", beta: float = 0.99, g0: Optional[MetricField] = None,
                     tolerance: float = DEFAULT_TOLERANCE, critical: bool = False,
                     seed: int = 0) -> ComparisonRecord:
    """Compare ``v`` with its p-harmonic extension for a frozen metric on the ball.

    ``lhs = int |dv - dw|_g^p dvol_g`` and ``rhs_factor = int |dv|_g^p
    dvol_g`` are taken over the elements of the extension sub-mesh (those
    whose centroids lie in the ball).  In ``"holder"`` mode the metric is
    frozen at the center and ``metric_seminorm_rbeta`` is the sampled
    ``[g]_beta r^beta``; in ``"linfty"`` mode ``g0`` is used (frozen at the
    center when omitted) and the sampled ``sup |g - g0|`` is reported.
    With ``critical`` the oscillation of ``v`` over the ball is recorded too.
    """
    if v.mesh is not ball.mesh:
        raise ShapeMismatch("field and ball live on different meshes")
    if mode not in ("holder", "linfty"):
        raise ValueError(f"unknown comparison mode {mode!r}")
    frozen = freeze(g, ball.center) if (g0 is None) else g0
    if mode == "holder" and g0 is not None:
        raise ValueError("holder mode freezes the metric at the ball center")
    try:
        ext = pharmonic_extension(v, ball, frozen, params, tolerance)
    except SolveDiverged as exc:
        raise SolveDiverged(f"comparison at radius {ball.radius:g}: {exc}", best=exc.best) from exc
    sub = ext.extra["submesh"]
    dv = ext.extra["restricted"].gradients
    dw = ext.field.gradients
    g_inv, sqrt_det = sub.metric_data(g)
    mass = sub.areas * sqrt_det
    lhs = math.fsum(mass * _grad_norm_p(dv - dw, g_inv, params.p))
    rhs = math.fsum(mass * _grad_norm_p(dv, g_inv, params.p))
    pts = _sample_ball(ball.center, ball.radius)
    if mode == "holder":
        a, b = _pairs(pts, np.random.default_rng(seed))
        semi = holder_seminorm(g, beta, np.stack([a, b], axis=1)) * ball.radius**beta
    else:
        semi = distance_to_constant(g, frozen(ball.center[None])[0], pts)
    return ComparisonRecord(
        radius=ball.radius, lhs=lhs, rhs_factor=rhs, ratio=lhs / rhs if rhs > 0 else 0.0,
        metric_seminorm_rbeta=float(semi), mode=mode, iterations=ext.iterations,
        oscillation=oscillation(v, ball) if critical else math.nan,
    )


@dataclass
class ComparisonSeries:
    records: list
    fit: LogLogFit

    def rows(self):
        return [r.row() for r in self.records]

    def summary(self) -> dict:
        return {"slope": self.fit.slope, "fit_residual": self.fit.residual,
                "radii": [r.radius for r in self.records], "ratios": [r.ratio for r in self.records]}


def comparison_series(v: VectorField, center, radii, g: MetricField, params: EnergyParams,
                      **kwargs) -> ComparisonSeries:
    recs = [comparison_ratio(v, ball_region(v.mesh, center, r), g, params, **kwargs) for r in radii]
    fit = loglog_fit([r.radius for r in recs], [r.ratio for r in recs])
    return ComparisonSeries(recs, fit)


# ---------------------------------------------------------------------------
# Campanato sequence
# ---------------------------------------------------------------------------


@dataclass
class DecayTable:
    hierarchy: DyadicHierarchy
    a: np.ndarray
    local_energies: np.ndarray
    mean_p_norms: np.ndarray
    fitted_exponent: float
    fit_residual: float
    cap_M: float
    initial_scale: float
    cap_ratio: float

    header = ["level", "radius", "a", "local_energy", "mean_p_norm"]

    def rows(self):
        return [[i, float(r), float(a), float(e), float(m)] for i, (r, a, e, m) in
                enumerate(zip(self.hierarchy.radii, self.a, self.local_energies, self.mean_p_norms))]

    def summary(self) -> dict:
        return {"fitted_exponent": self.fitted_exponent, "fit_residual": self.fit_residual,
                "a": [float(x) for x in self.a], "cap_M": self.cap_M,
                "initial_scale": self.initial_scale, "cap_ratio": self.cap_ratio}


def _sharp_average(grads, ball: BallRegion, p: float):
    idx = ball.support
    if len(idx) < 3:
        raise RegionTooCoarse(f"ball of radius {ball.radius:g} meets only {len(idx)} elements")
    mass = (ball.element_weights * ball.mesh.areas)[idx]
    total = math.fsum(mass)
    q = grads[idx].reshape(len(idx), -1)
    mean = np.array([math.fsum(mass * q[:, k]) for k in range(q.shape[1])]) / total
    dev = np.linalg.norm(q - mean, axis=1) ** p
    norm = np.linalg.norm(q, axis=1) ** p
    energy = math.fsum(mass * norm)
    return (math.fsum(mass * dev) / total) ** (1.0 / p), energy, (energy / total) ** (1.0 / p)


def campanato_sequence(v: VectorField, hierarchy: DyadicHierarchy, params: EnergyParams) -> DecayTable:
    """Sharp Lebesgue averages ``a_i`` of the gradient over a dyadic hierarchy.

    ``a_i = (avg_{B_i} |dv - (dv)_{B_i}|^p)^{1/p}`` with the flat norm.  The
    exponent is the slope of ``log a_i`` against ``log r_i`` (``inf`` when
    every ``a_i`` is at rounding level of the gradient).  ``cap_M`` is the largest
    ``(avg_{B_i} |dv|^p)^{1/p} + a_i``; ``cap_ratio`` divides it by the
    initial scale ``(avg_{B_0}|dv|^p)^{1/p} + (avg_{B_1}|dv|^p)^{1/p}``.
    """
    if hierarchy.balls[0].mesh is not v.mesh:
        raise ShapeMismatch("hierarchy and field live on different meshes")
    grads = v.gradients
    a, en, mp = [], [], []
    for ball in hierarchy.balls:
        ai, ei, mi = _sharp_average(grads, ball, params.p)
        a.append(ai)
        en.append(ei)
        mp.append(mi)
    a, en, mp = np.array(a), np.array(en), np.array(mp)
    span = float(np.ptp(v.mesh.vertices, axis=0).max())
    level = max(np.abs(grads).max(initial=0.0), np.abs(v.nodal_values).max(initial=0.0) / span)
    if np.all(a <= ROUNDOFF * level):
        slope, resid = INF_EXPONENT, 0.0
    else:
        fit = loglog_fit(hierarchy.radii, a)
        slope, resid = fit.slope, fit.residual
    init = mp[0] + mp[1]
    cap = float(np.max(mp + a))
    return DecayTable(hierarchy, a, en, mp, slope, resid, cap, float(init),
                      cap / init if init > 0 else math.nan)


# ---------------------------------------------------------------------------
# Morrey growth
# ---------------------------------------------------------------------------


@dataclass
class MorreyRecord:
    radii: np.ndarray
    values: np.ndarray
    exponent: float
    intercept: float
    fit_residual: float
    degenerate: bool

    header = ["radius", "morrey_quotient"]

    def rows(self):
        return [[float(r), float(q)] for r, q in zip(self.radii, self.values)]

    def summary(self) -> dict:
        return {"exponent": self.exponent, "intercept": self.intercept,
                "fit_residual": self.fit_residual, "degenerate": self.degenerate}


def morrey_decay(v: VectorField, center, radii, params: EnergyParams, g: MetricField) -> MorreyRecord:
    """Fit ``r^{p-n} int_{B(x,r)} |dv|_g^p dvol_g`` against ``r`` on log scales.

    A field with vanishing energy on some ball is reported as degenerate with
    a ``nan`` exponent.
    """
    n = 2
    if params.p > n:
        raise UnsupportedExponentCombo(f"Morrey quotient needs p <= n, got p = {params.p}")
    radii = np.asarray(radii, dtype=float)
    if len(radii) < 2:
        raise InsufficientScales("need at least two radii")
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")
    for r in radii:
        if not v.mesh.contains_ball(center, r):
            raise OutOfDomain(f"ball of radius {r:g} leaves the domain")
    g_inv, sqrt_det = v.mesh.metric_data(g)
    dens = _grad_norm_p(v.gradients, g_inv, params.p) * sqrt_det * v.mesh.areas
    vals = []
    for r in radii:
        b = ball_region(v.mesh, center, r)
        idx = b.support
        vals.append(r ** (params.p - n) * math.fsum(b.element_weights[idx] * dens[idx]))
    vals = np.array(vals)
    if np.any(vals <= 0):
        return MorreyRecord(radii, vals, math.nan, math.nan, math.nan, True)
    fit = loglog_fit(radii, vals)
    return MorreyRecord(radii, vals, fit.slope, fit.intercept, fit.residual, False)


# ---------------------------------------------------------------------------
# Hölder exponent
# ---------------------------------------------------------------------------


@dataclass
class HolderFit:
    scales: np.ndarray
    oscillations: np.ndarray
    exponent: float
    fit_residual: float

    header = ["scale", "max_oscillation"]

    def rows(self):
        return [[float(s), float(o)] for s, o in zip(self.scales, self.oscillations)]

    def summary(self) -> dict:
        return {"exponent": self.exponent, "fit_residual": self.fit_residual}


def holder_exponent(field, region: BallRegion, scales, mesh: Optional[TriMesh] = None) -> HolderFit:
    """Fit the largest oscillation over balls of radius ``s`` inside ``region`` against ``s``.

    Ball centers form a lattice of spacing ``s/2`` through the region center,
    restricted to ``B(center, R - s)``.  ``field`` is a :class:`VectorField`
    (nodal values at vertices) or an element gradient array (nt, n, N) taken
    at element centroids.  A field whose oscillation is at rounding level gets exponent ``inf``.
    """
    scales = np.sort(np.asarray(scales, dtype=float))[::-1]
    if len(scales) < 3:
        raise InsufficientScales(f"need at least 3 scales, got {len(scales)}")
    mesh = region.mesh if mesh is None else mesh
    if isinstance(field, VectorField):
        pts, vals = mesh.vertices, field.nodal_values
    else:
        grads = np.asarray(field, dtype=float)
        if grads.shape[0] != mesh.n_triangles:
            raise ShapeMismatch("gradient array does not match the mesh")
        pts, vals = mesh.centroids, grads.reshape(len(grads), -1)
    tree = cKDTree(pts)
    c, R = region.center, region.radius
    osc = []
    for s in scales:
        reach = max(R - s, 0.0)
        k = int(math.floor(reach / (s / 2)))
        t = np.arange(-k, k + 1) * (s / 2)
        xx, yy = np.meshgrid(t, t, indexing="ij")
        cand = np.column_stack([xx.ravel(), yy.ravel()])
        centers = c + cand[np.linalg.norm(cand, axis=1) <= reach + 1e-12]
        best = 0.0
        for nb in tree.query_ball_point(centers, s):
            if len(nb) > 1:
                best = max(best, point_set_diameter(vals[nb]))
        osc.append(best)
    osc = np.array(osc)
    if np.all(osc <= ROUNDOFF * np.abs(vals).max(initial=0.0)):
        return HolderFit(scales, osc, INF_EXPONENT, 0.0)
    fit = loglog_fit(scales, osc)
    return HolderFit(scales, osc, fit.slope, fit.residual)


# ---------------------------------------------------------------------------
# difference quotients of |dv|^{(p-2)/2} dv
# ---------------------------------------------------------------------------


@dataclass
class HessianRecord:
    h_values: np.ndarray
    quotient_integrals: np.ndarray
    per_direction: np.ndarray
    extrapolated_limit: float
    bound_factor: float
    grad_g_sup: float
    doubled_energy: float

    header = ["h", "quotient_integral", "direction_1", "direction_2"]

    @property
    def differences(self) -> np.ndarray:
        return np.abs(np.diff(self.quotient_integrals))

    @property
    def cauchy(self) -> bool:
        d = self.differences
        return bool(np.all(np.isfinite(self.quotient_integrals)) and np.all(d[1:] <= d[:-1]))

    @property
    def empirical_constant(self) -> float:
        return self.extrapolated_limit / self.bound_factor if self.bound_factor > 0 else math.nan

    def rows(self):
        return [[float(h), float(q), *map(float, d)] for h, q, d in
                zip(self.h_values, self.quotient_integrals, self.per_direction)]

    def summary(self) -> dict:
        return {"extrapolated_limit": self.extrapolated_limit, "bound_factor": self.bound_factor,
                "empirical_constant": self.empirical_constant, "cauchy": self.cauchy,
                "grad_g_sup": self.grad_g_sup}


def stress_field(v: VectorField, g: MetricField, p: float) -> np.ndarray:
    """``|dv|_g^{(p-2)/2} dv`` per element, shape (nt, n, N)."""
    g_inv, _ = v.mesh.metric_data(g)
    q = v.gradients
    s = np.maximum(np.einsum("taj,tab,tbj->t", q, g_inv, q), 0.0)
    return (s ** ((p - 2.0) / 4.0))[:, None, None] * q


def recover_nodal(mesh: TriMesh, element_values) -> np.ndarray:
    """Area-weighted average of element values onto vertices, shape (nv, k)."""
    vals = np.asarray(element_values, dtype=float).reshape(mesh.n_triangles, -1)
    w = np.repeat(mesh.areas, 3)
    num = scatter_add(mesh.triangles.ravel(), np.repeat(vals, 3, axis=0) * w[:, None], mesh.n_vertices)
    den = scatter_add(mesh.triangles.ravel(), w[:, None], mesh.n_vertices)
    return num / den


def hessian_quotient(v: VectorField, g: MetricField, ball: BallRegion, params: EnergyParams,
                     h_list, bound_constant: float = 1.0, recovery: bool = True) -> HessianRecord:
    """``int_B sum_i |D_{i,h} Phi(dv)|^2 dvol_g`` for each step ``h``.

    ``Phi(dv) = |dv|_g^{(p-2)/2} dv`` is element-constant.  With ``recovery``
    it is first averaged onto vertices and the P1 recovered field is sampled
    at each centroid ``x`` and at ``x + h e_i``; otherwise the translate is
    read off the element containing the shifted centroid.  Recovery removes
    most of the ``O(mesh_h / h)`` noise of piecewise-constant gradients.
    The limit ``h -> 0`` is extrapolated from the last two steps assuming a
    first-order error (the list is expected to halve ``h``).  The bound factor
    is ``C (1/r^2 + sup|grad g|^2) int_{2B} |dv|_g^p dvol_g`` with ``C =
    bound_constant`` and the sup sampled on ``2B``.

    Raises
    ------
    OutOfDomain
        If ``B(center, r + max h)`` leaves the domain.
    """
    if g.kind != "constant" and g.gradient is None:
        raise ValueError("hessian_quotient needs a metric with a gradient evaluator")
    h_arr = np.asarray(h_list, dtype=float)
    if len(h_arr) < 2 or np.any(h_arr <= 0):
        raise InsufficientScales("need at least two positive steps")
    mesh = v.mesh
    if not mesh.contains_ball(ball.center, ball.radius + h_arr.max()):
        raise OutOfDomain("ball enlarged by the largest step leaves the domain")
    phi = stress_field(v, g, params.p)
    shape = phi.shape[1:]
    idx = ball.support
    _, sqrt_det = mesh.metric_data(g)
    mass = (ball.element_weights * mesh.areas * sqrt_det)[idx]
    cent = mesh.centroids[idx]
    if recovery:
        rec = VectorField(mesh, recover_nodal(mesh, phi.reshape(len(phi), -1)))
        base = rec.evaluate(cent, clamp=True)
    else:
        base = phi[idx].reshape(len(idx), -1)
    totals, per_dir = [], []
    for h in h_arr:
        dirs = []
        for i in range(2):
            shift = np.zeros(2)
            shift[i] = h
            if recovery:
                moved = rec.evaluate(cent + shift, clamp=True)
            else:
                elem, _ = mesh.locate(cent + shift, clamp=True)
                moved = phi[elem].reshape(len(idx), -1)
            d = (moved - base) / h
            dirs.append(math.fsum(mass * np.einsum("tk,tk->t", d, d)))
        per_dir.append(dirs)
        totals.append(math.fsum(dirs))
    totals = np.array(totals)
    # first-order Richardson on the last two steps
    t = h_arr[-2] / h_arr[-1]
    limit = float((t * totals[-1] - totals[-2]) / (t - 1.0))
    big = ball_region(mesh, ball.center, 2 * ball.radius)
    g_inv, sqrt_det = mesh.metric_data(g)
    dens = _grad_norm_p(v.gradients, g_inv, params.p) * sqrt_det * mesh.areas
    e2 = math.fsum(big.element_weights[big.support] * dens[big.support])
    if g.kind == "constant":
        sup = 0.0
    else:
        pts = _sample_ball(ball.center, 2 * ball.radius, 24)
        pts = pts[np.linalg.norm(pts, axis=1) <= (g.domain_radius or np.inf)]
        sup = float(np.sqrt(np.einsum("mkab,mkab->m", g.grad(pts), g.grad(pts))).max())
    bound = bound_constant * (1.0 / ball.radius**2 + sup**2) * e2
    return HessianRecord(h_arr, totals, np.array(per_dir), limit, bound, sup, e2)


# ---------------------------------------------------------------------------
# convex hull (maximum) principle
# ---------------------------------------------------------------------------


@dataclass
class HullCheck:
    max_violation: float
    diameter: float
    method: str
    sup_ratio: float

    @property
    def relative_violation(self) -> float:
        return self.max_violation / self.diameter if self.diameter > 0 else self.max_violation

    def summary(self) -> dict:
        return {"max_violation": self.max_violation, "diameter": self.diameter,
                "relative_violation": self.relative_violation, "method": self.method,
                "sup_ratio": self.sup_ratio}


def _distance_to_hull(points, verts):
    """Euclidean distance of each point to conv(verts) via NNLS with a sum-to-one row."""
    scale = 1e3 * (1.0 + np.abs(verts).max())
    A = np.vstack([verts.T, scale * np.ones(len(verts))])
    out = np.zeros(len(points))
    for k, x in enumerate(points):
        lam, _ = nnls(A, np.append(x, scale))
        lam = lam / lam.sum()
        out[k] = np.linalg.norm(lam @ verts - x)
    return out


def convex_hull_check(v: VectorField, boundary_values, directions: int = 512, seed: int = 0) -> HullCheck:
    """Largest distance of interior nodal values outside the hull of the boundary values.

    Targets of dimension up to 3 get the exact hull (lower-dimensional hulls
    are handled in their affine span).  Beyond that, half-spaces
    ``<y, Z> >= min_boundary <phi, Z>`` are tested for random unit ``Z``.
    """
    bv = np.asarray(boundary_values, dtype=float)
    bv = bv.reshape(len(bv), -1)
    if bv.shape[1] != v.target_dim:
        raise ShapeMismatch("boundary values and field have different target dimensions")
    inner = v.nodal_values[v.mesh.interior_vertices]
    diam = point_set_diameter(bv)
    sup_b = float(np.linalg.norm(bv, axis=1).max())
    sup_i = float(np.linalg.norm(inner, axis=1).max()) if len(inner) else 0.0
    sup_ratio = sup_i / sup_b if sup_b > 0 else (0.0 if sup_i == 0 else math.inf)
    N = bv.shape[1]
    if len(inner) == 0:
        return HullCheck(0.0, diam, "empty", sup_ratio)
    if N > 3:
        rng = np.random.default_rng(seed)
        Z = rng.normal(size=(directions, N))
        Z /= np.linalg.norm(Z, axis=1, keepdims=True)
        alpha = (bv @ Z.T).min(axis=0)
        worst = (alpha - (inner @ Z.T).min(axis=0)).max()
        return HullCheck(float(max(worst, 0.0)), diam, "directions", sup_ratio)
    origin = bv.mean(axis=0)
    _, sv, vt = np.linalg.svd(bv - origin, full_matrices=False)
    rank = int(np.sum(sv > 1e-12 * max(sv.max(), 1e-300)))
    basis = vt[:rank]
    rel = inner - origin
    coords = rel @ basis.T
    off = np.linalg.norm(rel - coords @ basis, axis=1)
    bc = (bv - origin) @ basis.T
    if rank == 0:
        inside = np.zeros(len(inner))
    elif rank == 1:
        lo, hi = bc[:, 0].min(), bc[:, 0].max()
        inside = np.maximum(np.maximum(lo - coords[:, 0], coords[:, 0] - hi), 0.0)
    else:
        try:
            hull = ConvexHull(bc)
        except QhullError:
            hull = None
        if hull is None:
            inside = _distance_to_hull(coords, bc)
        else:
            verts = bc[hull.vertices]
            slack = coords @ hull.equations[:, :-1].T + hull.equations[:, -1]
            out = np.flatnonzero(slack.max(axis=1) > 0)
            inside = np.zeros(len(inner))
            if len(out):
                inside[out] = _distance_to_hull(coords[out], verts)
    dist = np.sqrt(off**2 + inside**2)
    return HullCheck(float(dist.max()), diam, f"hull-rank-{rank}", sup_ratio)


# ---------------------------------------------------------------------------
# hole filling
# ---------------------------------------------------------------------------


@dataclass
class HoleFillingRecord:
    center: np.ndarray
    radius: float
    theta: float
    numerator: float
    denominator: float
    theta_error: float

    @property
    def implied_exponent(self) -> float:
        return -math.log2(self.theta) if self.theta > 0 else math.inf

    def row(self) -> list:
        return [float(self.center[0]), float(self.center[1]), self.radius, self.theta,
                self.numerator, self.denominator]

    header = ["cx", "cy", "radius", "theta", "numerator", "denominator"]


def hole_filling_ratio(u: VectorField, center, r: float, n: int = 2) -> HoleFillingRecord:
    """``theta = int_{B(c, r/2)} |du|^n / int_{B(c, r)} |du|^n`` (flat norm and measure).

    ``theta_error`` propagates the ball overlap errors of both regions for a
    gradient of constant modulus.
    """
    c = np.asarray(center, dtype=float)
    if not u.mesh.contains_ball(c, r):
        raise OutOfDomain(f"ball at {c.tolist()} radius {r:g} leaves the domain")
    dens = np.linalg.norm(u.gradients.reshape(u.mesh.n_triangles, -1), axis=1) ** n * u.mesh.areas
    big, small = ball_region(u.mesh, c, r), ball_region(u.mesh, c, r / 2)
    den = math.fsum(big.element_weights[big.support] * dens[big.support])
    num = math.fsum(small.element_weights[small.support] * dens[small.support])
    if den <= 1e-14:
        raise DegenerateRegion(f"vanishing energy on the ball at {c.tolist()} radius {r:g}")
    theta = num / den
    err = (small.overlap_error + theta * big.overlap_error) / big.measure
    return HoleFillingRecord(c, float(r), theta, num, den, err)


@dataclass
class HoleFillingTable:
    records: list
    morrey_exponent: float

    def rows(self):
        return [r.row() for r in self.records]

    def summary(self) -> dict:
        return {"max_theta": max(r.theta for r in self.records),
                "morrey_exponent": self.morrey_exponent}


def hole_filling_table(u: VectorField, centers, radii, n: int = 2) -> HoleFillingTable:
    """Ratios over every (center, radius); iterating the worst ratio gives
    ``int_{B(r 2^-k)} <= theta^k int_{B(r)}``, i.e. growth ``r^{-log2 theta}``."""
    recs = [hole_filling_ratio(u, c, r, n) for c in centers for r in radii]
    worst = max(r.theta for r in recs)
    return HoleFillingTable(recs, -math.log2(worst) if worst > 0 else math.inf)


__all__ = [
    "ComparisonRecord", "ComparisonSeries", "DecayTable", "HessianRecord", "HoleFillingRecord",
    "HoleFillingTable", "HolderFit", "HullCheck", "LogLogFit", "MorreyRecord", "campanato_sequence",
    "comparison_ratio", "comparison_series", "convex_hull_check", "dyadic_hierarchy",
    "hessian_quotient", "hole_filling_ratio", "hole_filling_table", "holder_exponent", "loglog_fit",
    "morrey_decay", "stress_field", "write_csv", "write_plot_csv",
]
