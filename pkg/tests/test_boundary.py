import numpy as np
import pytest

from pharmonic import boundary as bd


def test_affine_and_constant():
    x = np.array([[0.5, -0.25], [0.0, 1.0]])
    f = bd.affine([[1.0, 2.0], [0.0, -1.0]], b=[1.0, 0.0])
    assert f.N == 2
    assert np.allclose(f(x), [[1.0, 0.25], [3.0, -1.0]])
    c = bd.constant([2.0, 3.0])
    assert np.allclose(c(x), [[2.0, 3.0]] * 2)


def test_radial_profile_solves_radial_equation():
    # (r^{n-1} |u'|^{p-2} u')' = 0 along the ray
    for p in (3.0, 4.0, 6.0):
        f = bd.radial_pfundamental(p=p)
        r = np.linspace(0.3, 0.9, 7)
        h = 1e-4
        u = lambda s: f(np.column_stack([s, np.zeros_like(s)]))[:, 0]
        du = lambda s: (u(s + h) - u(s - h)) / (2 * h)
        flux = lambda s: s * np.abs(du(s)) ** (p - 2) * du(s)
        assert np.allclose(flux(r), flux(r[0]), rtol=1e-5)
        assert np.isclose(bd.radial_exponent(p), (p - 2) / (p - 1))
    log = bd.radial_pfundamental(p=2.0)
    assert np.isclose(log([[np.e, 0.0]])[0, 0], 1.0)


def test_circle_kink_and_trig():
    th = np.linspace(0, 2 * np.pi, 9)
    x = np.column_stack([np.cos(th), np.sin(th)]) * 3.0
    assert np.allclose(np.linalg.norm(bd.circle_valued()(x), axis=1), 1.0)
    assert np.allclose(bd.kink(axis=1)(x)[:, 0], np.abs(x[:, 1]))
    a, b = bd.random_trig(seed=4, N=2), bd.random_trig(seed=4, N=2)
    assert np.array_equal(a(x), b(x))
    assert np.allclose(a(x)[0], a(x)[-1])  # periodic
    assert not np.allclose(a(x), bd.random_trig(seed=5, N=2)(x))


@pytest.mark.parametrize("family", bd.boundary_families())
def test_json_roundtrip(family):
    f = bd.FAMILIES[family]()
    g = bd.boundary_from_json(f.to_json())
    x = np.random.default_rng(0).uniform(-1, 1, size=(10, 2))
    assert np.array_equal(f(x), g(x))


def test_unknown_family():
    with pytest.raises(ValueError):
        bd.boundary_from_json({"family": "nope"})
