import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import disk
from pharmonic.energy import (EnergyParams, energy, energy_hessian, first_variation, localized_energy,
                              stiffness_matrix, total_energy, weak_form, weak_residual_norm)
from pharmonic.errors import ShapeMismatch
from pharmonic.grid import VectorField, ball_region, interpolate
from pharmonic.metric import closed_form_metric, constant_metric, identity_metric

METRICS = {
    "flat": identity_metric(),
    "aniso": closed_form_metric("anisotropic_sin", eps=0.3, k=1.0),
    "conformal": closed_form_metric("conformal_sin", eps=0.1, k=2.0),
    "checker": closed_form_metric("checkerboard", low=1.0, high=3.0, cell=0.3),
}


def _smooth_field(mesh, N, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(N, 6))
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    basis = np.column_stack([x, y, x * y, np.sin(2 * x), np.cos(3 * y), x**2])
    return VectorField(mesh, basis @ c.T)


def test_params_validation():
    with pytest.raises(ValueError):
        EnergyParams(p=1.5)
    with pytest.raises(ValueError):
        EnergyParams(N=0)
    with pytest.raises(ValueError):
        EnergyParams(mu=-1.0)
    assert EnergyParams(p=3, mu=0.1).with_mu(0.0).mu == 0.0


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
def test_affine_energy_closed_form(p):
    m = disk(3)
    A = np.array([[1.0, 2.0], [0.5, -1.0]])
    v = interpolate(m, lambda x: x @ A.T)
    assert np.isclose(total_energy(v, identity_metric(), EnergyParams(p=p, N=2)),
                      np.sum(A * A) ** (p / 2) * m.area, rtol=1e-12)
    g0 = np.array([[2.0, 0.5], [0.5, 1.0]])
    dens = np.trace(A @ np.linalg.inv(g0) @ A.T) ** (p / 2) * np.sqrt(np.linalg.det(g0))
    assert np.isclose(total_energy(v, constant_metric(g0), EnergyParams(p=p, N=2)), dens * m.area, rtol=1e-12)


def test_energy_scaling_and_gauge():
    m = disk(3)
    v = _smooth_field(m, 2, 0)
    P = EnergyParams(p=3.0, N=2)
    g = METRICS["aniso"]
    e = total_energy(v, g, P)
    assert np.isclose(total_energy(v * 2.5, g, P), 2.5**3 * e, rtol=1e-12)
    assert np.isclose(total_energy(v + np.array([3.0, -1.0]), g, P), e, rtol=1e-12)


@given(p=st.sampled_from([2.0, 2.5, 3.0, 4.0]), N=st.integers(1, 2),
       metric=st.sampled_from(sorted(METRICS)), seed=st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_first_variation_matches_finite_differences(p, N, metric, seed):
    m = disk(2)
    g = METRICS[metric]
    v = _smooth_field(m, N, seed)
    P = EnergyParams(p=p, N=N, mu=1e-3)
    d = np.random.default_rng(seed + 1).normal(size=v.nodal_values.shape)
    t = 1e-6
    fd = (total_energy(v.with_values(v.nodal_values + t * d), g, P)
          - total_energy(v.with_values(v.nodal_values - t * d), g, P)) / (2 * t)
    an = float(np.sum(first_variation(v, g, P) * d))
    assert abs(fd - an) <= 1e-6 * max(abs(an), 1e-3)


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
def test_hessian_matches_finite_differences(p):
    m = disk(2)
    g = METRICS["aniso"]
    v = _smooth_field(m, 2, 7)
    P = EnergyParams(p=p, N=2, mu=1e-2)
    H = energy_hessian(v, g, P)
    assert abs(H - H.T).max() < 1e-12 * abs(H).max()
    d = np.random.default_rng(3).normal(size=v.nodal_values.shape)
    t = 1e-6
    fd = (first_variation(v.with_values(v.nodal_values + t * d), g, P)
          - first_variation(v.with_values(v.nodal_values - t * d), g, P)).ravel() / (2 * t)
    assert np.allclose(H @ d.ravel(), fd, atol=1e-6 * np.abs(fd).max())


def _cotangent_stiffness(mesh):
    """Flat P1 stiffness from the cotangent formula."""
    n = mesh.n_vertices
    K = np.zeros((n, n))
    for tri in mesh.triangles:
        P = mesh.vertices[tri]
        for k in range(3):
            i, j, o = tri[(k + 1) % 3], tri[(k + 2) % 3], tri[k]
            a, b = mesh.vertices[i] - mesh.vertices[o], mesh.vertices[j] - mesh.vertices[o]
            cot = np.dot(a, b) / abs(a[0] * b[1] - a[1] * b[0])
            K[i, j] -= 0.5 * cot
            K[j, i] -= 0.5 * cot
            K[i, i] += 0.5 * cot
            K[j, j] += 0.5 * cot
        del P
    return K


def test_p2_stiffness_against_cotangent_formula():
    m = disk(2)
    K = stiffness_matrix(m, identity_metric()).toarray()
    assert np.allclose(K, _cotangent_stiffness(m), atol=1e-13)
    # p = 2 Hessian is twice the componentwise stiffness
    v = _smooth_field(m, 2, 1)
    H = energy_hessian(v, identity_metric(), EnergyParams(p=2.0, N=2)).toarray()
    assert np.allclose(H[0::2, 0::2], 2 * K, atol=1e-12)
    assert np.allclose(H[0::2, 1::2], 0.0)
    # and the variation is linear
    assert np.allclose(first_variation(v, identity_metric(), EnergyParams(p=2.0, N=2)),
                       2 * K @ v.nodal_values, atol=1e-12)


def test_weak_residual_properties():
    m = disk(4)
    P = EnergyParams(p=4.0, N=2)
    A = np.array([[1.0, 2.0], [0.5, -1.0]])
    aff = interpolate(m, lambda x: x @ A.T)
    for g in (identity_metric(), constant_metric([[2.0, 0.3], [0.3, 1.0]])):
        assert weak_residual_norm(aff, g, P) < 1e-13
    v = _smooth_field(m, 2, 4)
    g = METRICS["aniso"]
    r = weak_residual_norm(v, g, P)
    assert 1e-4 < r <= 1.0 + 1e-12  # Hölder bound
    assert np.isclose(weak_residual_norm(v * 10.0, g, P), r, rtol=1e-10)
    assert np.isclose(weak_residual_norm(v + 1.0, g, P), r, rtol=1e-10)
    # no factor p in the weak form
    assert np.allclose(weak_form(v, g, P, 0.0) * 4.0, first_variation(v, g, P))


def test_localized_energy():
    m = disk(4)
    v = _smooth_field(m, 1, 2)
    P = EnergyParams(p=3.0)
    g = METRICS["conformal"]
    whole = ball_region(m, (0.0, 0.0), 1.5)
    assert np.isclose(localized_energy(v, g, P, whole), total_energy(v, g, P), rtol=1e-12)
    part = localized_energy(v, g, P, ball_region(m, (0.2, 0.0), 0.3))
    assert 0 < part < total_energy(v, g, P)
    with pytest.raises(ShapeMismatch):
        localized_energy(v, g, P, ball_region(disk(3), (0, 0), 0.3))


def test_energy_report_and_shape_checks():
    m = disk(2)
    v = _smooth_field(m, 2, 0)
    rep = energy(v, identity_metric(), EnergyParams(p=2.0, N=2))
    doc = json.loads(rep.to_json())
    assert doc["mesh_hash"] == m.content_hash
    assert math.isclose(doc["total"], rep.per_element.sum(), rel_tol=1e-12)
    with pytest.raises(ShapeMismatch):
        total_energy(v, identity_metric(), EnergyParams(p=2.0, N=1))
    with pytest.raises(ShapeMismatch):
        total_energy(v, identity_metric(3), EnergyParams(p=2.0, N=2))
