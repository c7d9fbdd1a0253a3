import csv

import pytest

from services.api.services.errors import InvalidConfig
from services.api.services.exhaustive_analysis import expected_waiting_customers
from services.api.services.gg_analysis import cycle_lst
from services.api.services.model_core import LocationDensity
from services.api.services.simulator import (
    SimulationConfig,
    estimate_map,
    lst_probe,
    probe_from,
    run_replications,
    simulate,
)

BATCHES = 5000


def _config(params, policy, seed=7, **overrides):
    return SimulationConfig(params, policy, measured_batches=BATCHES, replications=3, seed=seed, **overrides)


def _close(estimate, target, slack=0.05):
    return abs(estimate.mean - target) <= 4.0 * estimate.ci_half_width + slack


def test_config_validation(s0):
    with pytest.raises(InvalidConfig):
        SimulationConfig(s0, "gated")
    with pytest.raises(InvalidConfig):
        SimulationConfig(s0, "exhaustive", measured_batches=10)
    with pytest.raises(InvalidConfig):
        SimulationConfig(s0, "exhaustive", replications=2)
    with pytest.raises(InvalidConfig):
        SimulationConfig(s0.with_load(0.0), "exhaustive")


def test_default_warmup_is_ten_cycles_of_batches(s0):
    assert SimulationConfig(s0, "exhaustive").warmup == 10
    assert SimulationConfig(s0, "exhaustive", warmup_batches=0).warmup == 0


def test_globally_gated_s0_matches_closed_forms(s0):
    estimates = estimate_map(simulate(_config(s0, "globally_gated")))
    assert _close(estimates["sojourn"], 3.5)
    assert _close(estimates["delivery"], 14.0 / 3.0)
    assert _close(estimates["cycle_mean"], 2.0)
    assert _close(estimates["cycle_second_moment"], 16.0 / 3.0, slack=0.2)
    assert _close(estimates["busy_fraction"], 0.5, slack=0.02)


def test_exhaustive_s0_matches_closed_forms(s0):
    estimates = estimate_map(simulate(_config(s0, "exhaustive")))
    assert _close(estimates["sojourn"], 2.5)
    assert _close(estimates["delivery"], 4.0)
    assert _close(estimates["waiting_customers"], 0.75)
    assert estimates["sojourn"].replications == 3
    assert estimates["sojourn"].total_batches == 3 * BATCHES


def test_same_seed_reproduces_every_estimate(s0, monkeypatch):
    first = simulate(_config(s0, "exhaustive", seed=11))
    monkeypatch.setenv("POLLING_THREADS", "1")
    again = simulate(_config(s0, "exhaustive", seed=11))
    other = simulate(_config(s0, "exhaustive", seed=12))
    assert first == again
    assert first != other


def test_no_gate_violations(k2):
    results = run_replications(_config(k2, "globally_gated"))
    assert all(r.gate_violations == 0 for r in results)
    assert all(r.sojourns.size == BATCHES for r in results)


def test_cycle_transform_probe(s0):
    config = _config(s0, "globally_gated")
    results = run_replications(config)
    for omega in (0.1, 0.5, 1.0):
        probe = probe_from(config, results, "cycle", omega)
        assert probe.metric == "lst_cycle"
        assert abs(probe.mean - cycle_lst(s0, omega)) <= 4.0 * probe.ci_half_width + 0.01


def test_lst_probe_rejects_unknown_metric(s0):
    with pytest.raises(InvalidConfig):
        lst_probe(_config(s0, "exhaustive"), "waiting", 0.5)
    with pytest.raises(InvalidConfig):
        lst_probe(_config(s0, "exhaustive"), "cycle", -1.0)


def test_trace_file(tmp_path, s0):
    path = tmp_path / "trace.csv"
    simulate(SimulationConfig(s0, "exhaustive", measured_batches=1000, replications=3, seed=3), trace_path=path)
    with path.open(encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["time", "event", "position", "batch_id"]
    times = [float(row[0]) for row in rows[1:]]
    assert times == sorted(times)
    assert len(rows) > 1000


def test_exhaustive_work_conservation_and_waiting_customers(k2):
    expected_l = expected_waiting_customers(k2)
    uniform = estimate_map(simulate(_config(k2, "exhaustive")))
    linear = estimate_map(simulate(_config(k2.with_location(LocationDensity.polynomial([0.5, 1.0])), "exhaustive")))
    for estimates in (uniform, linear):
        assert _close(estimates["busy_fraction"], k2.rho, slack=0.02)
        assert _close(estimates["cycle_mean"], k2.alpha / (1.0 - k2.rho))
        assert _close(estimates["waiting_customers"], expected_l)
    # the number waiting does not depend on where customers are placed
    gap = abs(uniform["waiting_customers"].mean - linear["waiting_customers"].mean)
    assert gap <= 4.0 * (uniform["waiting_customers"].ci_half_width + linear["waiting_customers"].ci_half_width) + 0.05
