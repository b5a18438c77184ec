"""Triangulated unit disk, ball sub-regions, P1 fields and averages over balls.

Everything here is two-dimensional and piecewise linear: gradients are
constant per element, so element-weighted sums of gradient quantities are
exact once the ball/element overlap fractions are known.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.distance import pdist

from .errors import EmptyRegion, OutOfDomain, RefinementOutOfRange, ShapeMismatch
from .metric import MetricField, metric_arrays

MAX_LEVEL = 9
BALL_SLACK = 1e-12


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Disk:
    radius: float = 1.0

    def contains_ball(self, center, r) -> bool:
        return float(np.linalg.norm(center)) + r <= self.radius + BALL_SLACK

    def describe(self) -> dict:
        return {"kind": "disk", "radius": self.radius}


@dataclass(frozen=True)
class Annulus:
    inner: float
    outer: float = 1.0

    def contains_ball(self, center, r) -> bool:
        d = float(np.linalg.norm(center))
        return d + r <= self.outer + BALL_SLACK and d - r >= self.inner - BALL_SLACK

    def describe(self) -> dict:
        return {"kind": "annulus", "inner_radius": self.inner, "radius": self.outer}


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------


class TriMesh:
    """Conforming triangle mesh of a planar domain.

    Triangles are re-oriented counter-clockwise on construction.  Boundary
    vertices are found topologically (vertices of edges owned by a single
    triangle).
    """

    def __init__(self, vertices, triangles, level: int = 0, domain=None, name: str = "mesh"):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        tri = np.array(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ShapeMismatch("vertices must have shape (nv, 2)")
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise ShapeMismatch("triangles must have shape (nt, 3)")
        p = self.vertices[tri]
        signed = 0.5 * _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        flip = signed < 0
        tri[flip] = tri[flip][:, [0, 2, 1]]
        self.triangles = tri
        self.level = level
        self.domain = domain
        self.name = name
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self._metric_cache: dict = {}

    # -- sizes ---------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @property
    def element_areas(self) -> np.ndarray:
        return self.areas

    @property
    def area(self) -> float:
        return math.fsum(self.areas)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return np.linalg.norm(e, axis=2).max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """Gradients of the three barycentric hat functions, shape (nt, 3, 2)."""
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        jac = np.stack([e1, e2], axis=2)  # columns are edge vectors
        jinv_t = np.linalg.inv(jac).transpose(0, 2, 1)
        ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        return np.einsum("ka,tba->tkb", ref, jinv_t)

    @cached_property
    def _bary_inverse(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        return np.linalg.inv(jac)

    # -- topology -------------------------------------------------------------

    @cached_property
    def _edges(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        uniq, inverse, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
        return uniq, inverse.reshape(3, -1).T, counts

    @cached_property
    def boundary_vertex_flags(self) -> np.ndarray:
        uniq, _, counts = self._edges
        flags = np.zeros(self.n_vertices, dtype=bool)
        flags[uniq[counts == 1].ravel()] = True
        return flags

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_vertex_flags)

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_vertex_flags)

    @cached_property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.vertices, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.triangles, dtype="<i8").tobytes())
        return h.hexdigest()

    def describe(self) -> dict:
        return {"name": self.name, "refinement_level": self.level,
                "content_hash": self.content_hash,
                "domain": self.domain.describe() if self.domain is not None else None}

    # -- geometry queries ------------------------------------------------------

    @cached_property
    def _tree(self):
        return cKDTree(self.centroids)

    def locate(self, points, clamp: bool = False):
        """Containing element and barycentric coordinates of ``points``.

        Points outside the mesh get element ``-1`` unless ``clamp`` is set, in
        which case they are snapped to the nearest candidate element.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        m = len(pts)
        elem = np.full(m, -1, dtype=np.int64)
        bary = np.zeros((m, 3))
        best_violation = np.full(m, np.inf)
        pending = np.arange(m)
        for k in (8, 32, 128):
            if len(pending) == 0:
                break
            k_eff = min(k, self.n_triangles)
            _, cand = self._tree.query(pts[pending], k=k_eff)
            cand = np.asarray(cand).reshape(len(pending), k_eff)
            lam = self._barycentric(pts[pending][:, None, :], cand)
            violation = np.maximum(-lam, 0.0).sum(axis=2)
            j = np.argmin(violation, axis=1)
            rows = np.arange(len(pending))
            v = violation[rows, j]
            better = v < best_violation[pending]
            sel = pending[better]
            elem[sel] = cand[rows, j][better]
            bary[sel] = lam[rows, j][better]
            best_violation[sel] = v[better]
            pending = pending[best_violation[pending] > 1e-12]
        inside = best_violation <= 1e-12
        if clamp:
            b = np.clip(bary, 0.0, None)
            bary = b / b.sum(axis=1, keepdims=True)
        else:
            elem[~inside] = -1
        return elem, bary

    def _barycentric(self, pts, elems):
        p0 = self.vertices[self.triangles[elems, 0]]
        l12 = np.einsum("...ij,...j->...i", self._bary_inverse[elems], pts - p0)
        return np.concatenate([1.0 - l12.sum(axis=-1, keepdims=True), l12], axis=-1)

    def contains_ball(self, center, r) -> bool:
        if self.domain is not None:
            return self.domain.contains_ball(center, r)
        theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        ring = np.asarray(center)[None, :] + r * np.column_stack([np.cos(theta), np.sin(theta)])
        elem, _ = self.locate(np.vstack([ring, center]))
        return bool(np.all(elem >= 0))

    def submesh(self, element_mask):
        """Mesh made of the selected elements, plus parent vertex and element ids."""
        elems = np.flatnonzero(np.asarray(element_mask, dtype=bool))
        tri = self.triangles[elems]
        verts, local = np.unique(tri.ravel(), return_inverse=True)
        sub = TriMesh(self.vertices[verts], local.reshape(-1, 3), level=self.level,
                      domain=None, name=f"{self.name}/sub")
        return sub, verts, elems

    def metric_data(self, metric: MetricField):
        """Cached (g_inv, sqrt_det) of ``metric`` at element centroids."""
        key = id(metric)
        hit = self._metric_cache.get(key)
        if hit is not None and hit[0] is metric:
            return hit[1]
        arr = metric_arrays(metric, self.centroids)
        data = (arr.g_inv, arr.sqrt_det)
        if len(self._metric_cache) > 16:
            self._metric_cache.clear()
        self._metric_cache[key] = (metric, data)
        return data

    def mapped(self, matrix, name: str = "mapped") -> "TriMesh":
        """Image of the mesh under the linear map ``x -> matrix @ x``."""
        a = np.asarray(matrix, dtype=float)
        return TriMesh(self.vertices @ a.T, self.triangles, level=self.level, domain=None, name=name)


DiskMesh = TriMesh


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _refine(vertices, triangles, project):
    tri = triangles
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e.sort(axis=1)
    uniq, inverse, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
    mids = 0.5 * (vertices[uniq[:, 0]] + vertices[uniq[:, 1]])
    bnd = counts == 1
    mids[bnd] = project(mids[bnd])
    nv = len(vertices)
    m = nv + inverse.reshape(3, -1).T  # midpoints of edges (01, 12, 20)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    new = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, c]),
        np.column_stack([m01, m12, m20]),
    ])
    return np.vstack([vertices, mids]), new


def build_disk_mesh(refinement_level: int, radius: float = 1.0) -> TriMesh:
    """Uniformly refined triangulation of the disk, starting from an octagon fan.

    New boundary midpoints are pushed onto the circle, so every level keeps all
    previous vertices and boundary vertices stay on the circle.
    """
    if not 0 <= refinement_level <= MAX_LEVEL:
        raise RefinementOutOfRange(f"level {refinement_level} outside [0, {MAX_LEVEL}]")
    theta = 2 * np.pi * np.arange(8) / 8
    verts = np.vstack([[0.0, 0.0], radius * np.column_stack([np.cos(theta), np.sin(theta)])])
    tri = np.array([[0, 1 + i, 1 + (i + 1) % 8] for i in range(8)])

    def project(pts):
        return radius * pts / np.linalg.norm(pts, axis=1, keepdims=True)

    for _ in range(refinement_level):
        verts, tri = _refine(verts, tri, project)
    return TriMesh(verts, tri, level=refinement_level, domain=Disk(radius), name="disk")


def build_annulus_mesh(refinement_level: int, inner_radius: float = 0.25, outer_radius: float = 1.0,
                       spacing: str = "uniform") -> TriMesh:
    """Polar triangulation of the annulus ``inner < |x| < outer``.

    ``spacing="uniform"`` uses equally spaced rings; ``"geometric"`` spaces
    them geometrically, which makes the mesh self-similar under dilations
    about the origin.  Each level doubles both the radial and angular counts
    (nested vertex sets, four times the elements).
    """
    if not 0 <= refinement_level <= MAX_LEVEL:
        raise RefinementOutOfRange(f"level {refinement_level} outside [0, {MAX_LEVEL}]")
    if not 0 < inner_radius < outer_radius:
        raise ValueError("need 0 < inner_radius < outer_radius")
    ratio = outer_radius / inner_radius
    nr = 2**refinement_level
    s = np.arange(nr + 1) / nr
    if spacing == "geometric":
        n_theta0 = max(3, int(round(2 * np.pi / math.log(ratio))))
        radii = inner_radius * ratio ** s
    elif spacing == "uniform":
        mid = 0.5 * (inner_radius + outer_radius)
        n_theta0 = max(3, int(round(2 * np.pi * mid / (outer_radius - inner_radius))))
        radii = inner_radius + (outer_radius - inner_radius) * s
    else:
        raise ValueError(f"unknown ring spacing {spacing!r}")
    nt = n_theta0 * 2**refinement_level
    radii[-1] = outer_radius
    theta = 2 * np.pi * np.arange(nt) / nt
    rr, tt = np.meshgrid(radii, theta, indexing="ij")
    verts = np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])
    i, j = np.meshgrid(np.arange(nr), np.arange(nt), indexing="ij")
    i, j = i.ravel(), j.ravel()
    v00 = i * nt + j
    v01 = i * nt + (j + 1) % nt
    v10 = (i + 1) * nt + j
    v11 = (i + 1) * nt + (j + 1) % nt
    even = (i + j) % 2 == 0
    t1 = np.where(even[:, None], np.column_stack([v00, v10, v11]), np.column_stack([v00, v10, v01]))
    t2 = np.where(even[:, None], np.column_stack([v00, v11, v01]), np.column_stack([v10, v11, v01]))
    return TriMesh(verts, np.vstack([t1, t2]), level=refinement_level,
                   domain=Annulus(inner_radius, outer_radius), name=f"annulus-{spacing}")


def build_mesh(spec: Optional[dict], level: int) -> TriMesh:
    spec = spec or {"kind": "disk"}
    kind = spec.get("kind", "disk")
    if kind == "disk":
        return build_disk_mesh(level)
    if kind == "annulus":
        return build_annulus_mesh(level, float(spec.get("inner_radius", 0.25)),
                                  spacing=spec.get("spacing", "uniform"))
    raise ValueError(f"unknown mesh kind {kind!r}")


# ---------------------------------------------------------------------------
# ball regions
# ---------------------------------------------------------------------------


def _subdivision_points(depth: int) -> np.ndarray:
    """Barycentric centroids of the 4**depth congruent sub-triangles of a triangle."""
    tris = [np.eye(3)]
    for _ in range(depth):
        nxt = []
        for t in tris:
            a, b, c = t
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            nxt += [np.array([a, ab, ca]), np.array([ab, b, bc]), np.array([ca, bc, c]), np.array([ab, bc, ca])]
        tris = nxt
    return np.array([t.mean(axis=0) for t in tris])


_SUBDIVISION = {d: _subdivision_points(d) for d in range(5)}


@dataclass
class BallRegion:
    """Ball ``B(center, radius)`` seen through the mesh as per-element overlap fractions."""

    mesh: TriMesh
    center: np.ndarray
    radius: float
    element_weights: np.ndarray
    overlap_error: float = 0.0

    @property
    def measure(self) -> float:
        return math.fsum(self.element_weights * self.mesh.areas)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.element_weights > 0)

    def vertex_mask(self) -> np.ndarray:
        d = np.linalg.norm(self.mesh.vertices - self.center, axis=1)
        return d <= self.radius * (1 + 1e-12)

    def centroid_mask(self) -> np.ndarray:
        d = np.linalg.norm(self.mesh.centroids - self.center, axis=1)
        return d <= self.radius


def ball_region(mesh: TriMesh, center, radius: float, depth: int = 3) -> BallRegion:
    """Overlap fractions of every element with ``B(center, radius)``.

    Elements with all vertices in the ball count fully; elements that may cut
    the circle are split into ``4**depth`` congruent pieces and weighted by the
    fraction of piece centroids inside the ball.
    """
    c = np.asarray(center, dtype=float).reshape(2)
    if radius <= 0:
        raise ValueError("radius must be positive")
    vert_in = np.linalg.norm(mesh.vertices - c, axis=1) <= radius
    full = vert_in[mesh.triangles].all(axis=1)
    dc = np.linalg.norm(mesh.centroids - c, axis=1)
    cand = (~full) & (dc <= radius + mesh.diameters)
    w = full.astype(float)
    idx = np.flatnonzero(cand)
    err = 0.0
    if len(idx):
        lam = _SUBDIVISION[depth]
        p = mesh.vertices[mesh.triangles[idx]]  # (k, 3, 2)
        sub = np.einsum("sa,kad->ksd", lam, p)
        inside = np.linalg.norm(sub - c, axis=2) <= radius
        w[idx] = inside.mean(axis=1)
        cut = idx[(w[idx] > 0) & (w[idx] < 1)]
        if len(cut):
            err = math.pi * radius * float(mesh.diameters[cut].max()) / 2**depth
    if not np.any(w > 0):
        raise EmptyRegion(f"ball at {c.tolist()} radius {radius:g} misses the mesh")
    return BallRegion(mesh, c, float(radius), w, err)


# ---------------------------------------------------------------------------
# P1 fields
# ---------------------------------------------------------------------------


@dataclass
class VectorField:
    """Nodal P1 map ``v : mesh -> R^N``."""

    mesh: TriMesh
    nodal_values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.nodal_values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] != self.mesh.n_vertices:
            raise ShapeMismatch(f"{vals.shape[0]} nodal values for {self.mesh.n_vertices} vertices")
        self.nodal_values = vals

    @property
    def target_dim(self) -> int:
        return self.nodal_values.shape[1]

    @cached_property
    def gradients(self) -> np.ndarray:
        """Element gradients, shape (nt, n, N): entry [t, a, j] = d_a v^j on element t."""
        B = self.mesh.shape_gradients
        return np.einsum("tka,tkj->taj", B, self.nodal_values[self.mesh.triangles])

    def evaluate(self, points, clamp: bool = False) -> np.ndarray:
        elem, bary = self.mesh.locate(points, clamp=clamp)
        if np.any(elem < 0):
            raise OutOfDomain("evaluation point outside the mesh")
        vals = self.nodal_values[self.mesh.triangles[elem]]
        return np.einsum("mk,mkj->mj", bary, vals)

    def with_values(self, values) -> "VectorField":
        return VectorField(self.mesh, values)

    def __add__(self, other):
        if isinstance(other, VectorField):
            if other.mesh is not self.mesh:
                raise ShapeMismatch("fields live on different meshes")
            return self.with_values(self.nodal_values + other.nodal_values)
        return self.with_values(self.nodal_values + np.asarray(other, dtype=float))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return self.with_values(self.nodal_values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def interpolate(mesh: TriMesh, func: Callable[[np.ndarray], np.ndarray]) -> VectorField:
    """Nodal interpolant of ``func : (m, 2) -> (m,) or (m, N)``."""
    return VectorField(mesh, func(mesh.vertices))


def _element_quantity(mesh, quantity):
    q = np.asarray(quantity, dtype=float)
    if q.shape[0] != mesh.n_triangles:
        raise ShapeMismatch(f"{q.shape[0]} element values for {mesh.n_triangles} elements")
    return q


def ball_integral(quantity, region: BallRegion, weight: Union[str, MetricField] = "lebesgue") -> float:
    q = _element_quantity(region.mesh, quantity)
    mass = region.element_weights * region.mesh.areas
    if isinstance(weight, MetricField):
        mass = mass * region.mesh.metric_data(weight)[1]
    elif weight != "lebesgue":
        raise ValueError(f"unknown weight {weight!r}")
    idx = region.support
    return math.fsum(mass[idx] * q[idx])


def ball_average(quantity, region: BallRegion, weight: Union[str, MetricField] = "lebesgue") -> float:
    """Average of an element quantity over a ball.

    With a metric as ``weight`` the integral is taken against ``dvol_g`` and
    divided by the Lebesgue measure of the ball, so for ``g = c * id`` in two
    dimensions a constant quantity ``q`` averages to ``c * q``.
    """
    measure = region.measure
    if measure <= 0:
        raise EmptyRegion("ball region has zero measure")
    return ball_integral(quantity, region, weight) / measure


def mean_gradient(field: VectorField, region: BallRegion) -> np.ndarray:
    if region.mesh is not field.mesh:
        raise ShapeMismatch("region and field live on different meshes")
    idx = region.support
    if len(idx) == 0:
        raise EmptyRegion("empty region")
    mass = (region.element_weights * region.mesh.areas)[idx]
    grads = field.gradients[idx]
    total = np.array([[math.fsum(mass * grads[:, a, j]) for j in range(grads.shape[2])]
                      for a in range(grads.shape[1])])
    return total / math.fsum(mass)


def point_set_diameter(values) -> float:
    """Largest pairwise Euclidean distance between rows of ``values``."""
    pts = np.asarray(values, dtype=float)
    pts = pts.reshape(len(pts), -1)
    if len(pts) < 2:
        return 0.0
    if pts.shape[1] == 1:
        return float(np.ptp(pts[:, 0]))
    if len(pts) > 2000 and pts.shape[1] <= 6:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    if len(pts) > 4000:
        best = 0.0
        for start in range(0, len(pts), 1000):
            block = pts[start:start + 1000]
            d = np.linalg.norm(block[:, None, :] - pts[None, :, :], axis=2)
            best = max(best, float(d.max()))
        return best
    return float(pdist(pts).max())


def oscillation(field, region: BallRegion) -> float:
    """Diameter of the values taken over the ball.

    A :class:`VectorField` is judged on its nodal values at vertices inside
    the closed ball; an array of per-element gradients (nt, n, N) on the
    elements meeting the ball.
    """
    if isinstance(field, VectorField):
        mask = region.vertex_mask()
        if not mask.any():
            raise EmptyRegion("no vertex inside the ball")
        return point_set_diameter(field.nodal_values[mask])
    grads = np.asarray(field, dtype=float)
    if grads.shape[0] != region.mesh.n_triangles:
        raise ShapeMismatch("gradient array does not match the mesh")
    idx = region.support
    if len(idx) == 0:
        raise EmptyRegion("empty region")
    return point_set_diameter(grads[idx].reshape(len(idx), -1))


@dataclass
class DyadicHierarchy:
    center: np.ndarray
    r0: float
    delta: float
    balls: list = field(default_factory=list)

    @property
    def radii(self) -> np.ndarray:
        return np.array([b.radius for b in self.balls])


def dyadic_hierarchy(mesh: TriMesh, center, r0: float, delta: float = 0.5, count: int = 4) -> DyadicHierarchy:
    """Concentric balls of radii ``delta**i * r0``, i = 0..count-1."""
    c = np.asarray(center, dtype=float).reshape(2)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if count < 2:
        raise ValueError("a hierarchy needs at least two balls")
    if not mesh.contains_ball(c, r0):
        raise OutOfDomain(f"ball at {c.tolist()} radius {r0:g} leaves the domain")
    balls = [ball_region(mesh, c, delta**i * r0) for i in range(count)]
    return DyadicHierarchy(c, float(r0), float(delta), balls)


# ---------------------------------------------------------------------------
# CSV dumps
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    """Round-trippable, platform independent float formatting."""
    return repr(float(x))


def write_field_csv(field: VectorField, path) -> None:
    N = field.target_dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex_id", "x", "y", *[f"v_{j + 1}" for j in range(N)]])
        for k, (xy, val) in enumerate(zip(field.mesh.vertices, field.nodal_values)):
            w.writerow([k, fmt(xy[0]), fmt(xy[1]), *map(fmt, val)])


def read_field_csv(path, mesh: TriMesh) -> VectorField:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n_val = len(header) - 3
    vals = np.zeros((mesh.n_vertices, n_val))
    for row in body:
        vals[int(row[0])] = [float(x) for x in row[3:]]
    return VectorField(mesh, vals)


def write_mesh_csv(mesh: TriMesh, vertices_path, triangles_path) -> None:
    with open(vertices_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex_id", "x", "y", "boundary"])
        for k, (xy, b) in enumerate(zip(mesh.vertices, mesh.boundary_vertex_flags)):
            w.writerow([k, fmt(xy[0]), fmt(xy[1]), int(b)])
    with open(triangles_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["triangle_id", "v0", "v1", "v2"])
        for k, t in enumerate(mesh.triangles):
            w.writerow([k, *map(int, t)])


def read_mesh_csv(vertices_path, triangles_path, level: int = 0) -> TriMesh:
    vtx = np.loadtxt(vertices_path, delimiter=",", skiprows=1, ndmin=2)
    tri = np.loadtxt(triangles_path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    return TriMesh(vtx[:, 1:3], tri[:, 1:4], level=level)
