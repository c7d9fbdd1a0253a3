import json

import pytest

from services.api.services.errors import InvalidConfig, UnstableSystem
from services.api.services.scenarios import (
    SCENARIO_DIR,
    load_scenario,
    load_scenario_spec,
    load_sweep,
    parse_scenario,
    build_parameters,
)

from conftest import ROOT


def _write(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


S0 = {
    "lambda": 0.5,
    "alpha": 1.0,
    "batch": {"kind": "deterministic", "size": 1},
    "service": {"kind": "deterministic", "value": 1.0},
    "location": {"kind": "uniform"},
}


def test_bundled_scenarios_load():
    for path in sorted(SCENARIO_DIR.glob("*.json")):
        if path.name.endswith(".sweep.json"):
            continue
        params = load_scenario(path)
        assert 0.0 < params.rho < 1.0


def test_warehouse_template():
    params = load_scenario("warehouse")
    assert params.rho == pytest.approx(0.6)
    assert params.alpha == 600.0
    assert params.service.mean == pytest.approx(5.0)
    assert params.batch.mean == pytest.approx(15.0, abs=1e-9)
    assert params.lam == pytest.approx(0.6 / 75.0)
    assert params.location.pdf(0.1) == pytest.approx(2.5)


def test_rho_rescales_lambda(tmp_path):
    data = dict(S0)
    del data["lambda"]
    data["rho"] = 0.25
    params = load_scenario(_write(tmp_path, data))
    assert params.lam == pytest.approx(0.25)


def test_exactly_one_of_lambda_and_rho():
    with pytest.raises(InvalidConfig):
        parse_scenario({**S0, "rho": 0.3})
    without = {k: v for k, v in S0.items() if k != "lambda"}
    with pytest.raises(InvalidConfig):
        parse_scenario(without)


def test_validation_errors_name_the_field():
    bad = {**S0, "batch": {"kind": "deterministic"}}
    with pytest.raises(InvalidConfig, match="batch"):
        parse_scenario(bad)
    with pytest.raises(InvalidConfig, match="alpha"):
        parse_scenario({**S0, "alpha": -1.0})


def test_unstable_load_is_reported():
    with pytest.raises(UnstableSystem):
        build_parameters(parse_scenario({**S0, "lambda": 2.0}))


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(InvalidConfig, match="not found"):
        load_scenario(tmp_path / "nope.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(InvalidConfig, match="invalid JSON"):
        load_scenario(broken)


def test_location_kinds(tmp_path):
    classes = [
        {"name": "fast", "demand": 0.5, "space": 0.2},
        {"name": "medium", "demand": 0.3, "space": 0.3},
        {"name": "slow", "demand": 0.2, "space": 0.5},
    ]
    spec = load_scenario_spec(
        _write(tmp_path, {**S0, "location": {"kind": "class_based", "classes": classes, "order": ["slow", "fast", "medium"]}})
    )
    assert build_parameters(spec).location.pdf(0.1) == pytest.approx(0.4)

    interval = {**S0, "location": {"kind": "interval", "start": 0.25, "end": 0.75, "floor": 0.1}}
    assert build_parameters(parse_scenario(interval)).location.pdf(0.1) == pytest.approx(0.1)

    piecewise = {
        **S0,
        "location": {"kind": "piecewise", "segments": [{"start": 0.0, "coefficients": [1.5]}, {"start": 0.5, "coefficients": [0.5]}]},
    }
    assert build_parameters(parse_scenario(piecewise)).location.cdf(0.5) == pytest.approx(0.75)

    with pytest.raises(InvalidConfig):
        parse_scenario({**S0, "location": {"kind": "beta", "a": 2.0}})


def test_sweep_resolves_its_scenario():
    sweep, params = load_sweep("small-b.sweep")
    assert sweep.values[0] == 0.1 and sweep.values[-1] == 0.9
    assert params.batch.k_max == 15
    assert params.service.mean == pytest.approx(0.01)


def test_sweep_values_must_increase(tmp_path):
    path = _write(tmp_path, {"scenario": "s0.json", "values": [0.5, 0.3]}, "bad.sweep.json")
    with pytest.raises(InvalidConfig, match="increasing"):
        load_sweep(path)


def test_bundled_files_pass_the_validator(capsys):
    from scripts.validate_scenarios import main

    assert main() == 0
    assert "Scenario validation passed." in capsys.readouterr().out
    assert (ROOT / "scripts" / "validate_scenarios.py").exists()
