import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pharmonic.errors import DegeneratePair, EmptySampleSet, MetricNotSPD, OutOfDomain
from pharmonic.metric import (closed_form_metric, comparability_ratio, constant_metric,
                              distance_to_constant, ellipticity_bounds, eval_metric, freeze,
                              grid_metric, holder_seminorm, identity_metric, metric_families,
                              metric_from_json, metric_to_json, sample_grid, spd_decompose)


def test_identity_sample():
    s = eval_metric(identity_metric(), [0.3, -0.2])
    assert np.array_equal(s.g, np.eye(2))
    assert s.sqrt_det == 1.0
    assert np.allclose(s.sqrt_g, np.eye(2))


def test_derived_quantities_consistent():
    s = eval_metric(closed_form_metric("anisotropic_sin", eps=0.3), [0.2, 0.7])
    assert np.allclose(s.sqrt_g @ s.sqrt_g, s.g, atol=1e-14)
    assert np.allclose(s.g @ s.g_inv, np.eye(2), atol=1e-14)
    assert np.allclose(s.inv_sqrt_g @ s.sqrt_g, np.eye(2), atol=1e-14)
    assert np.isclose(s.sqrt_det, np.sqrt(np.linalg.det(s.g)))


@given(a=st.floats(0.1, 10), b=st.floats(0.1, 10), theta=st.floats(0, np.pi))
@settings(max_examples=50, deadline=None)
def test_spd_decompose_rotated_diagonal(a, b, theta):
    c, s = np.cos(theta), np.sin(theta)
    R = np.array([[c, -s], [s, c]])
    g = R @ np.diag([a, b]) @ R.T
    arr = spd_decompose(g)
    assert np.allclose(np.sort(arr.eigvals[0]), np.sort([a, b]), rtol=1e-10)
    assert np.isclose(arr.sqrt_det[0], np.sqrt(a * b), rtol=1e-10)
    assert np.allclose(arr.sqrt_g()[0] @ arr.sqrt_g()[0], g, atol=1e-10 * max(a, b))


def test_not_spd_rejected():
    with pytest.raises(MetricNotSPD):
        constant_metric([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(MetricNotSPD):
        spd_decompose(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(MetricNotSPD):
        constant_metric([[1.0, 2.0, 3.0]])


def test_out_of_domain():
    g = closed_form_metric("conformal_sin")
    with pytest.raises(OutOfDomain):
        g(np.array([[1.5, 0.0]]))
    # constant metrics are defined everywhere
    assert constant_metric(2 * np.eye(2))(np.array([[5.0, 5.0]])).shape == (1, 2, 2)


def test_ellipticity_bounds_conformal_sin():
    g = closed_form_metric("conformal_sin", eps=0.1, k=1.0)
    b = ellipticity_bounds(g, sample_grid(41))
    assert 0.9 - 1e-12 <= b.lambda_ <= 0.91
    assert 1.09 <= b.Lambda <= 1.1 + 1e-12
    with pytest.raises(EmptySampleSet):
        ellipticity_bounds(g, np.zeros((0, 2)))


def test_holder_seminorm_linear_factor():
    # g = (1 + a x1) id: |g(x) - g(y)| = a |x1 - y1|
    g = closed_form_metric("conformal_linear", a=0.5)
    x = np.array([[0.0, 0.0], [0.1, 0.0]])
    y = np.array([[0.2, 0.0], [0.1, 0.3]])
    val = holder_seminorm(g, 0.5, np.stack([x, y], axis=1))
    assert np.isclose(val, 0.5 * 0.2 / 0.2**0.5)
    with pytest.raises(DegeneratePair):
        holder_seminorm(g, 0.5, np.stack([x, x], axis=1))
    with pytest.raises(ValueError):
        holder_seminorm(g, 1.0, np.stack([x, y], axis=1))


def test_holder_radial_exponent_is_sharp():
    g = closed_form_metric("holder_radial", c=1.0, beta=0.5)
    t = np.array([1e-2, 1e-4, 1e-6])
    pairs = np.stack([np.zeros((3, 2)), np.column_stack([t, 0 * t])], axis=1)
    assert np.isclose(holder_seminorm(g, 0.5, pairs), 1.0)


def test_distance_to_constant():
    g = closed_form_metric("conformal_sin", eps=0.1)
    assert distance_to_constant(identity_metric(), np.eye(2), sample_grid(5)) == 0.0
    d = distance_to_constant(g, np.eye(2), sample_grid(21))
    assert 0.1 < d < 0.35


def test_freeze_and_json_roundtrip():
    g = closed_form_metric("anisotropic_sin", eps=0.2)
    g0 = freeze(g, [0.1, 0.2])
    assert g0.kind == "constant"
    assert np.allclose(g0(np.zeros((1, 2)))[0], g(np.array([[0.1, 0.2]]))[0])
    doc = json.loads(json.dumps(metric_to_json(g)))
    h = metric_from_json(doc)
    pts = sample_grid(7)
    assert np.array_equal(h(pts), g(pts))
    assert np.array_equal(metric_from_json({"kind": "constant", "scale": 2.0})(pts[:1])[0], 2 * np.eye(2))


def test_gradient_matches_finite_differences():
    for fam in ("conformal_sin", "conformal_linear", "anisotropic_sin"):
        g = closed_form_metric(fam)
        x = np.array([[0.2, -0.3], [-0.4, 0.1]])
        h = 1e-6
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            fd = (g(x + e) - g(x - e)) / (2 * h)
            assert np.allclose(g.grad(x)[:, k], fd, atol=1e-8)


def test_grid_metric_reproduces_nodes():
    xs = np.linspace(-1, 1, 5)
    vals = np.zeros((5, 5, 2, 2))
    vals[..., 0, 0] = 1 + xs[:, None] ** 2
    vals[..., 1, 1] = 2.0
    g = grid_metric(xs, xs, vals)
    assert np.allclose(g(np.array([[0.5, 0.0]]))[0], np.diag([1.25, 2.0]))
    # bilinear in between
    assert np.allclose(g(np.array([[0.25, 0.1]]))[0, 0, 0], 1 + 0.5 * (0.0 + 0.25))


def test_registry_listing():
    fams = metric_families()
    assert fams == sorted(fams)
    for tag in ("constant", "conformal_sin", "checkerboard"):
        assert tag in fams
    with pytest.raises(ValueError):
        closed_form_metric("nope")


def test_comparability_ratio():
    assert comparability_ratio(identity_metric(), 3.0, sample_grid(5)) == 1.0
    g = closed_form_metric("checkerboard", low=1.0, high=2.0)
    # |z|^p_g vol_g = c^{1 - p/2} for g = c id in n = 2
    r = comparability_ratio(g, 4.0, sample_grid(21))
    assert np.isclose(r, 2.0)
