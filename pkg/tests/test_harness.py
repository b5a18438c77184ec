import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import disk
from pharmonic import boundary as bd
from pharmonic.energy import EnergyParams
from pharmonic.errors import (DegenerateRegion, InsufficientScales, OutOfDomain, RegionTooCoarse,
                              ShapeMismatch, UnsupportedExponentCombo)
from pharmonic.grid import VectorField, ball_region, dyadic_hierarchy, interpolate
from pharmonic.harness import (campanato_sequence, comparison_ratio, comparison_series,
                               convex_hull_check, hessian_quotient, hole_filling_ratio,
                               hole_filling_table, holder_exponent, loglog_fit, morrey_decay,
                               recover_nodal, stress_field, write_csv)
from pharmonic.metric import closed_form_metric, constant_metric, identity_metric
from pharmonic.solver import DirichletProblem, solve_dirichlet

FLAT = identity_metric()
CONF = closed_form_metric("conformal_sin", eps=0.1, k=1.0)


def _affine(mesh, A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return interpolate(mesh, lambda x: x @ A.T)


def test_loglog_fit():
    x = np.array([0.4, 0.2, 0.1, 0.05])
    fit = loglog_fit(x, 3.0 * x**1.5)
    assert fit.slope == pytest.approx(1.5) and fit.residual == pytest.approx(0.0, abs=1e-12)
    assert math.isclose(math.exp(fit.intercept), 3.0)
    assert math.isnan(loglog_fit(x, [1.0, 0.0, 1.0, 1.0]).slope)


def test_write_csv_roundtrips_floats(tmp_path):
    vals = [0.1 + 0.2, 1 / 3, 1e-300]
    write_csv(tmp_path / "t.csv", ["a", "b"], [[1, v] for v in vals])
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["a", "b"]
    assert [float(r[1]) for r in rows[1:]] == vals


def test_comparison_vanishes_for_constant_metric():
    m = disk(5)
    g0 = constant_metric([[2.0, 0.3], [0.3, 1.0]])
    params = EnergyParams(p=3.0, N=1)
    sol = solve_dirichlet(DirichletProblem.from_function(m, g0, params, bd.random_trig(seed=1)))
    rec = comparison_ratio(sol.field, ball_region(m, (0.1, 0.0), 0.3), g0, params)
    assert rec.lhs <= 1e-14 * rec.rhs_factor and rec.rhs_factor > 0
    assert rec.metric_seminorm_rbeta == 0.0


def test_comparison_positive_and_modes():
    m = disk(5)
    params = EnergyParams(p=3.0, N=1)
    sol = solve_dirichlet(DirichletProblem.from_function(m, CONF, params, bd.affine([[1.0, 0.5]])),
                          tolerance=1e-10)
    ball = ball_region(m, (0.0, 0.0), 0.4)
    rec = comparison_ratio(sol.field, ball, CONF, params, beta=0.99, tolerance=1e-10)
    assert 0 < rec.ratio < 1e-2
    lin = comparison_ratio(sol.field, ball, CONF, params, mode="linfty", tolerance=1e-10, critical=True)
    assert lin.lhs == pytest.approx(rec.lhs, rel=1e-8)
    assert 0 < lin.metric_seminorm_rbeta <= 3 * 0.1 + 1e-12
    assert lin.oscillation > 0
    with pytest.raises(ValueError):
        comparison_ratio(sol.field, ball, CONF, params, mode="sup")
    with pytest.raises(ValueError):
        comparison_ratio(sol.field, ball, CONF, params, g0=FLAT)
    with pytest.raises(ShapeMismatch):
        comparison_ratio(sol.field, ball_region(disk(4), (0, 0), 0.3), CONF, params)
    ser = comparison_series(sol.field, (0.0, 0.0), [0.4, 0.2, 0.1], CONF, params, tolerance=1e-10)
    assert ser.fit.slope > 2.0
    assert ser.summary()["radii"] == [0.4, 0.2, 0.1]


def test_campanato_affine_and_kink():
    m = disk(5)
    params = EnergyParams(p=3.0, N=1)
    hier = dyadic_hierarchy(m, (0.0, 0.1), 0.4, 0.5, 4)
    aff = campanato_sequence(_affine(m, [[2.0, -1.0]]), hier, params)
    assert np.all(aff.a <= 1e-12 * aff.mean_p_norms)
    kink = interpolate(m, bd.kink())
    hk = dyadic_hierarchy(m, (0.0, 0.0), 0.4, 0.5, 4)
    tab = campanato_sequence(kink, hk, params)
    assert np.allclose(tab.a, 1.0, atol=1e-12)
    assert abs(tab.fitted_exponent) < 1e-10
    assert tab.cap_M == pytest.approx(2.0)
    zero = campanato_sequence(interpolate(m, bd.constant([1.0])), hk, params)
    assert zero.fitted_exponent == math.inf


def test_campanato_gauge_and_scaling():
    m = disk(5)
    v = interpolate(m, bd.random_trig(seed=2, N=2))
    hier = dyadic_hierarchy(m, (0.1, 0.1), 0.5, 0.5, 3)
    P = EnergyParams(p=4.0, N=2)
    base = campanato_sequence(v, hier, P)
    shifted = campanato_sequence(v + np.array([5.0, -3.0]), hier, P)
    assert np.allclose(base.a, shifted.a, rtol=1e-9)
    scaled = campanato_sequence(v * -2.0, hier, P)
    assert np.allclose(scaled.a, 2.0 * base.a, rtol=1e-12)
    with pytest.raises(RegionTooCoarse):
        campanato_sequence(v, dyadic_hierarchy(m, (0.1, 0.1), 0.05, 0.1, 2), P)


def test_morrey():
    m = disk(5)
    radii = [0.4, 0.2, 0.1]
    rec = morrey_decay(_affine(m, [[1.0, 1.0]]), (0.0, 0.0), radii, EnergyParams(p=2.0), FLAT)
    # |A|^2 * pi r^2
    assert np.allclose(rec.values, 2 * math.pi * np.array(radii) ** 2, rtol=5e-3)
    assert rec.exponent == pytest.approx(2.0, abs=5e-3)
    v = interpolate(m, bd.random_trig(seed=3))
    a = morrey_decay(v, (0.1, 0.0), radii, EnergyParams(p=2.0), CONF)
    b = morrey_decay(v * 3.0 + 1.0, (0.1, 0.0), radii, EnergyParams(p=2.0), CONF)
    assert np.allclose(b.values, 9.0 * a.values, rtol=1e-12)
    assert b.exponent == pytest.approx(a.exponent, rel=1e-10)
    assert morrey_decay(interpolate(m, bd.constant()), (0, 0), radii, EnergyParams(p=2.0), FLAT).degenerate
    with pytest.raises(UnsupportedExponentCombo):
        morrey_decay(v, (0, 0), radii, EnergyParams(p=3.0), FLAT)
    with pytest.raises(ValueError):
        morrey_decay(v, (0, 0), radii[::-1], EnergyParams(p=2.0), FLAT)
    with pytest.raises(OutOfDomain):
        morrey_decay(v, (0.8, 0), radii, EnergyParams(p=2.0), FLAT)


def test_holder_exponent():
    m = disk(5)
    region = ball_region(m, (0.0, 0.0), 0.5)
    scales = [0.2, 0.1, 0.05]
    fit = holder_exponent(_affine(m, [[1.0, 2.0]]), region, scales)
    assert fit.exponent == pytest.approx(1.0, abs=0.05)
    assert holder_exponent(interpolate(m, bd.constant()), region, scales).exponent == math.inf
    # element gradients of an affine map have no oscillation
    grads = _affine(m, [[1.0, 2.0]]).gradients
    assert holder_exponent(grads, region, scales).exponent == math.inf
    with pytest.raises(InsufficientScales):
        holder_exponent(_affine(m, [[1.0, 0.0]]), region, [0.2, 0.1])
    with pytest.raises(ShapeMismatch):
        holder_exponent(grads[:-1], region, scales)


def test_recover_nodal_exact_for_constants():
    m = disk(3)
    vals = np.tile([1.0, -2.0], (m.n_triangles, 1))
    assert np.allclose(recover_nodal(m, vals), [1.0, -2.0])


def test_hessian_quotient_quadratic_and_invariants():
    m = disk(6)
    ball = ball_region(m, (0.0, 0.0), 0.3)
    hs = [8 * m.h, 4 * m.h, 2 * m.h]
    quad = interpolate(m, lambda x: np.column_stack([x[:, 0] ** 2, np.zeros(len(x))]))
    rec = hessian_quotient(quad, FLAT, ball, EnergyParams(p=2.0, N=2), hs)
    assert rec.extrapolated_limit == pytest.approx(4.0 * ball.measure, rel=5e-3)
    assert np.all(rec.per_direction[:, 1] < 1e-2 * rec.per_direction[:, 0])
    aff = hessian_quotient(_affine(m, [[1.0, 2.0]]), FLAT, ball, EnergyParams(p=3.0), hs)
    assert np.all(aff.quotient_integrals < 1e-20)
    v = interpolate(m, bd.random_trig(seed=4, N=2))
    P = EnergyParams(p=3.0, N=2)
    a = hessian_quotient(v, CONF, ball, P, hs)
    b = hessian_quotient(v + np.array([2.0, 1.0]), CONF, ball, P, hs)
    assert np.allclose(a.quotient_integrals, b.quotient_integrals, rtol=1e-9)
    assert a.grad_g_sup > 0 and a.bound_factor > 0
    assert stress_field(v, FLAT, 2.0).shape == (m.n_triangles, 2, 2)
    with pytest.raises(OutOfDomain):
        hessian_quotient(v, FLAT, ball_region(m, (0.6, 0.0), 0.35), P, hs)
    with pytest.raises(InsufficientScales):
        hessian_quotient(v, FLAT, ball, P, [m.h])


def test_convex_hull_check():
    m = disk(4)
    data = bd.circle_valued()
    bv = data(m.vertices[m.boundary_vertices])
    good = interpolate(m, lambda x: 0.5 * x)
    chk = convex_hull_check(good, bv)
    assert chk.max_violation == 0.0 and chk.method == "hull-rank-2"
    bad = good.nodal_values.copy()
    bad[m.interior_vertices[0]] = [2.0, 0.0]
    assert convex_hull_check(good.with_values(bad), bv).max_violation == pytest.approx(1.0, abs=2e-3)
    # rank 1 and high-dimensional targets
    line = interpolate(m, lambda x: np.column_stack([x[:, 0], 2 * x[:, 0]]))
    assert convex_hull_check(line, line.nodal_values[m.boundary_vertices]).method == "hull-rank-1"
    four = interpolate(m, lambda x: np.column_stack([x, x ** 2]) * 0.9)
    ref = interpolate(m, lambda x: np.column_stack([x, x ** 2]))
    chk = convex_hull_check(four, ref.nodal_values[m.boundary_vertices])
    assert chk.method == "directions" and chk.sup_ratio <= 1.0
    with pytest.raises(ShapeMismatch):
        convex_hull_check(good, bv[:, :1])


def test_hole_filling_affine_is_quarter():
    m = disk(5)
    rec = hole_filling_ratio(_affine(m, [[1.0, 0.0], [0.0, 2.0]]), (0.1, -0.2), 0.4)
    assert abs(rec.theta - 0.25) <= max(rec.theta_error, 1e-3)
    assert rec.implied_exponent == pytest.approx(2.0, abs=0.05)
    with pytest.raises(DegenerateRegion):
        hole_filling_ratio(interpolate(m, bd.constant([1.0, 1.0])), (0, 0), 0.4)
    with pytest.raises(OutOfDomain):
        hole_filling_ratio(_affine(m, [[1.0, 0.0]]), (0.9, 0), 0.4)


@given(seed=st.integers(0, 10_000), cx=st.floats(-0.3, 0.3), r=st.floats(0.1, 0.5))
@settings(max_examples=25, deadline=None)
def test_hole_filling_ratio_in_unit_interval(seed, cx, r):
    m = disk(4)
    u = interpolate(m, bd.random_trig(seed=seed, N=2))
    rec = hole_filling_ratio(u, (cx, 0.0), r)
    assert 0.0 <= rec.theta <= 1.0


def test_hole_filling_table():
    m = disk(4)
    u = interpolate(m, bd.random_trig(seed=1, N=2))
    tab = hole_filling_table(u, [(0.0, 0.0), (0.2, 0.1)], [0.4, 0.2])
    assert len(tab.records) == 4
    assert tab.morrey_exponent == pytest.approx(-math.log2(tab.summary()["max_theta"]))
