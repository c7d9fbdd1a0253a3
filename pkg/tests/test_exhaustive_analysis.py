import math

import numpy as np
import pytest

from services.api.services.errors import GridMismatch, InvalidConfig, NonPositiveDensity
from services.api.services.exhaustive_analysis import (
    analyse_exhaustive,
    coupling_gap,
    dump_grid_csv,
    expected_waiting_customers,
    exhaustive_mean_delivery,
    exhaustive_mean_sojourn,
    fixed_point_residual,
    generated_delivery_service,
    generated_delivery_travel,
    generated_wait_service,
    generated_wait_travel,
    mass_balance,
    partial_spread,
    solve_fk,
    spread,
    spread_decomposition,
)
from services.api.services.limits import exhaustive_limits
from services.api.services.model_core import LocationDensity, distance
from services.api.services.scenarios import load_scenario

from conftest import make_params


# ─── closed forms on S0 ──────────────────────────────────────────────────────

def test_s0_waiting_customers(s0):
    assert expected_waiting_customers(s0) == pytest.approx(0.75)


def test_s0_partial_spread(s0):
    f_alpha, f_br = partial_spread(s0, 0.2, 0.7)
    assert f_alpha == pytest.approx(0.5)
    assert f_br == pytest.approx(0.25)
    x = np.array([0.2, 0.9])
    y = np.array([0.7, 0.1])
    f_alpha, f_br = partial_spread(s0, x, y)
    assert np.allclose(f_alpha + f_br, 1.25 * distance(x, y) + 0.125)


def test_s0_generated_waiting_times(s0):
    assert generated_wait_service(s0, 0.2, 0.7) == pytest.approx(math.exp(0.25))
    assert generated_wait_travel(s0, 0.2, 0.7) == pytest.approx(2.0 * (math.exp(0.25) - 1.0), rel=1e-10)
    assert generated_wait_travel(s0, 0.4, 0.4) == 0.0
    assert generated_wait_travel(s0, 0.4, 0.4, full_circle=True) == pytest.approx(2.0 * (math.exp(0.5) - 1.0))


def test_s0_generated_delivery_times(s0):
    # behind the server the remaining mass V(x) = 1 - x decides
    assert generated_delivery_service(s0, 0.2, 0.7) == pytest.approx(math.exp(0.4))
    far = math.exp(0.5 + 0.5 * 0.3) - 0.5 * 0.3 * math.exp(0.15)
    assert generated_delivery_service(s0, 0.7, 0.2) == pytest.approx(far)
    near = 2.0 * (math.exp(0.4) - 1.0)
    assert generated_delivery_travel(s0, 0.2, 0.7) == pytest.approx(near, rel=1e-10)


def test_s0_single_customers_need_no_grid(s0):
    grid, report = solve_fk(s0)
    assert not np.any(grid.fk)
    assert report.iterations == 1
    assert report.error_bound_g == 0.0
    assert report.shift_applied is None
    sojourn, sojourn_bound = exhaustive_mean_sojourn(s0, grid)
    delivery, delivery_bound = exhaustive_mean_delivery(s0, grid)
    assert sojourn == pytest.approx(2.5, abs=1e-9)
    assert delivery == pytest.approx(4.0, abs=1e-9)
    assert sojourn_bound == 0.0 and delivery_bound == 0.0
    assert spread(s0, grid, 0.2, 0.7) == pytest.approx(0.75)


# ─── grid solver ─────────────────────────────────────────────────────────────

def test_uniform_pairs_match_closed_form(k2):
    grid, report = solve_fk(k2, n=256, delta=1e-9)
    nodes = grid.nodes
    exact = distance(nodes[:, None], nodes[None, :])  # (ρ/(1-ρ))·(E[K(K-1)]/E[K])·d = d
    assert np.max(np.abs(grid.fk - exact)) <= report.error_bound_fk
    assert report.achieved_delta <= 1e-9
    assert report.regularity_margin == pytest.approx(1.0)


def test_spread_decomposition_adds_up(k2):
    grid, _ = solve_fk(k2, n=64)
    parts = spread_decomposition(k2, grid)
    total = parts.f_alpha(0.2, 0.7) + parts.f_br(0.2, 0.7) + parts.f_k(0.2, 0.7)
    assert parts.total(0.2, 0.7) == pytest.approx(total)


@pytest.mark.parametrize("rho", [0.3, 0.6])
def test_fixed_point_residual_within_bound(linear_poisson, rho):
    params = linear_poisson.with_load(rho)
    grid, report = solve_fk(params, n=64)
    residual = fixed_point_residual(params, grid)
    assert residual.shape == (64, 64)
    assert np.max(np.abs(residual)) <= 2.0 * report.error_bound_g


@pytest.mark.parametrize("rho", [0.3, 0.6])
def test_mass_balance(linear_poisson, rho):
    params = linear_poisson.with_load(rho)
    grid, _ = solve_fk(params, n=64)
    balance = mass_balance(params, grid)
    assert balance.closed_form == pytest.approx(expected_waiting_customers(params))
    assert abs(balance.value - balance.closed_form) <= balance.tolerance


@pytest.mark.parametrize(
    "location",
    [
        LocationDensity.uniform(),
        LocationDensity.polynomial([0.5, 1.0]),
        LocationDensity.class_based([0.5, 0.3, 0.2], [0.2, 0.3, 0.5]),
    ],
)
def test_iterate_differences_follow_geometric_envelope(location):
    params = make_params(size=2, location=location).with_load(0.9)
    _, report = solve_fk(params, n=32)
    for m in range(4, report.iterations + 1):
        assert report.differences[m - 1] <= report.envelope(m) * (1 + 1e-9)
    with pytest.raises(InvalidConfig):
        report.envelope(3)


def test_coupling_gap_stays_below_bound(linear_poisson):
    params = linear_poisson.with_load(0.3)
    grid, report = solve_fk(params, n=64)
    gap, bound = coupling_gap(params, grid, samples=16)
    assert gap.shape == bound.shape == (16, 16)
    assert np.all(gap <= bound + report.error_bound_g)


def test_vanishing_density_needs_a_floor():
    location = LocationDensity.interval(0.25, 0.75)
    params = make_params(size=2, location=location).with_load(0.3)
    with pytest.raises(NonPositiveDensity):
        solve_fk(params, n=32)
    floored = params.with_location(location.with_floor(1e-8))
    grid, _ = solve_fk(floored, n=32)
    assert np.all(np.isfinite(grid.values))


def test_solver_rejects_bad_inputs(k2):
    with pytest.raises(InvalidConfig):
        solve_fk(k2, n=8)
    with pytest.raises(InvalidConfig):
        solve_fk(k2, n=32, delta=0.0)


def test_grid_must_match_parameters(k2, s0):
    grid, _ = solve_fk(k2, n=32)
    with pytest.raises(GridMismatch):
        exhaustive_mean_sojourn(s0, grid)
    with pytest.raises(GridMismatch):
        spread(k2.with_load(0.4), grid, 0.1, 0.2)


def test_dump_grid_csv(tmp_path, k2):
    grid, _ = solve_fk(k2, n=16)
    path = dump_grid_csv(grid, tmp_path / "grid.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "i,j,x,y,g,f_k"
    assert len(lines) == 1 + 16 * 16


# ─── means against limits and policy ordering ────────────────────────────────

def test_light_traffic_means(s0, k2):
    for params in (s0, k2):
        light = exhaustive_limits(params, "light")
        summary = analyse_exhaustive(params.with_load(1e-6), n=32)
        assert summary.sojourn == pytest.approx(light.sojourn_limit, abs=1e-4)
        assert summary.delivery == pytest.approx(light.delivery_limit, abs=1e-4)


def test_heavy_traffic_means(s0):
    heavy = exhaustive_limits(s0, "heavy")
    summary = analyse_exhaustive(s0.with_load(0.95))
    assert 0.05 * summary.sojourn == pytest.approx(heavy.sojourn_limit, rel=0.05)
    assert 0.05 * summary.delivery == pytest.approx(heavy.delivery_limit, rel=0.05)


def test_bounds_shrink_with_the_grid(k2):
    coarse = analyse_exhaustive(k2, n=32)
    fine = analyse_exhaustive(k2, n=128)
    assert fine.sojourn_bound < coarse.sojourn_bound
    assert abs(fine.sojourn - coarse.sojourn) <= coarse.sojourn_bound + fine.sojourn_bound
    assert abs(fine.delivery - coarse.delivery) <= coarse.delivery_bound + fine.delivery_bound


@pytest.mark.parametrize("name", ["s0", "k2", "linear-poisson", "warehouse"])
def test_delivery_never_precedes_sojourn(name):
    summary = analyse_exhaustive(load_scenario(name), n=64)
    assert summary.delivery >= summary.sojourn
