import math

import pytest

from pharmonic import regression as reg

FAST = {
    "comparison_slope": lambda: reg.comparison_scenario().fit.slope,
    "radial_campanato_exponent": lambda: reg.campanato_scenario().fitted_exponent,
    "morrey_slope": lambda: reg.morrey_scenario().exponent,
    "critical_iterations": lambda: reg.critical_scenario().iterations,
    "hessian_empirical_constant": lambda: reg.hessian_scenario().empirical_constant,
}


def test_fixture_file_complete():
    doc = reg.load_fixtures()
    assert set(FAST) <= set(doc["values"])
    for key in ("numpy", "scipy", "python", "generated", "scenarios"):
        assert key in doc["provenance"]
    for entry in doc["values"].values():
        assert math.isfinite(entry["value"]) and entry["rtol"] >= 0


@pytest.mark.parametrize("name", sorted(FAST))
def test_pinned_values_reproduce(name):
    measured = FAST[name]()
    value, rtol = reg.pinned(name)
    assert reg.matches(name, measured), (name, measured, value, rtol)


def test_hessian_record_consistent_with_pins():
    rec = reg.hessian_scenario()
    assert reg.matches("hessian_extrapolated_limit", rec.extrapolated_limit)
    assert reg.matches("hessian_bound_factor", rec.bound_factor)
    assert rec.cauchy


def test_regenerate_to_file(tmp_path):
    out = tmp_path / "fx.json"
    assert reg.main(["--out", str(out)]) == 0
    import json
    doc = json.loads(out.read_text())
    for name, entry in doc["values"].items():
        assert reg.matches(name, entry["value"])
