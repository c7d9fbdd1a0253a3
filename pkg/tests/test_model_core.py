import math

import numpy as np
import pytest
from scipy import stats

from services.api.services.errors import InvalidConfig, UnstableSystem
from services.api.services.model_core import (
    BatchSizeDistribution,
    LocationDensity,
    ServiceTimeDistribution,
    cdf,
    circular_integral,
    distance,
    sample_location,
    server_location_density,
)
from services.api.services.quadrature import integrate

from conftest import make_params


def test_uniform_density_cdf_and_wrapped_integral():
    loc = LocationDensity.uniform()
    assert cdf(loc, 0.3) == pytest.approx(0.3)
    assert circular_integral(loc, 0.2, 0.7) == pytest.approx(0.5)
    assert circular_integral(loc, 0.7, 0.2) == pytest.approx(0.5)
    assert circular_integral(loc, 0.4, 0.4) == 0.0


def test_circular_integral_of_server_density_and_constants():
    loc = LocationDensity.polynomial([0.5, 1.0])
    rho = 0.3
    direct = rho * loc.circular_integral(0.8, 0.1) + (1 - rho) * 0.3
    assert circular_integral(loc, 0.8, 0.1, rho, 1 - rho) == pytest.approx(direct)
    assert circular_integral(None, 0.2, 0.7, constant=1.0) == pytest.approx(0.5)
    assert circular_integral(2.0, 0.9, 0.1) == pytest.approx(0.4)


def test_polynomial_density_exact_cdf():
    loc = LocationDensity.polynomial([0.5, 1.0])
    assert loc.pdf(0.25) == pytest.approx(0.75)
    assert loc.cdf(0.5) == pytest.approx(0.375)
    assert loc.cdf(1.0) == pytest.approx(1.0)
    assert loc.tail(0.5) == pytest.approx(0.625)
    assert loc.sup == pytest.approx(1.5)


def test_density_validation():
    with pytest.raises(InvalidConfig):
        LocationDensity.polynomial([-0.5, 3.0])  # mass 1 but negative near x = 0
    with pytest.raises(InvalidConfig):
        LocationDensity.polynomial([2.0])
    with pytest.raises(InvalidConfig):
        LocationDensity.polynomial([1.0, 0.0, 0.0, 0.0, 1.0])
    with pytest.raises(InvalidConfig):
        LocationDensity.piecewise([(0.1, [1.0])])


def test_small_mass_error_is_renormalized():
    loc = LocationDensity.polynomial([1.0 + 1e-10])
    assert loc.cdf(1.0) == pytest.approx(1.0, abs=1e-15)


def test_class_based_layout_and_order():
    loc = LocationDensity.class_based([0.5, 0.3, 0.2], [0.2, 0.3, 0.5])
    assert loc.pdf(0.1) == pytest.approx(2.5)
    assert loc.pdf(0.3) == pytest.approx(1.0)
    assert loc.pdf(0.9) == pytest.approx(0.4)
    assert loc.cdf(0.2) == pytest.approx(0.5)

    slow_first = LocationDensity.class_based([0.5, 0.3, 0.2], [0.2, 0.3, 0.5], order=[2, 0, 1])
    assert slow_first.pdf(0.1) == pytest.approx(0.4)
    assert slow_first.pdf(0.6) == pytest.approx(2.5)

    with pytest.raises(InvalidConfig):
        LocationDensity.class_based([0.5, 0.5], [0.2, 0.3])


def test_interval_density_and_floor():
    loc = LocationDensity.interval(0.25, 0.75)
    assert loc.pdf(0.5) == pytest.approx(2.0)
    assert loc.pdf(0.1) == 0.0
    floored = loc.with_floor(0.1)
    assert floored.pdf(0.1) == pytest.approx(0.1)
    assert floored.pdf(0.5) == pytest.approx(1.9)
    assert floored.cdf(1.0) == pytest.approx(1.0)


def test_beta_density_is_piecewise_cubic_fit():
    loc = LocationDensity.beta(3.0, 3.0)
    assert loc.cdf(0.5) == pytest.approx(0.5, abs=1e-6)
    assert loc.pdf(0.5) == pytest.approx(1.875, rel=1e-3)
    with pytest.raises(InvalidConfig):
        LocationDensity.beta(0.5, 2.0)


def test_inverse_cdf_sampling():
    loc = LocationDensity.polynomial([0.5, 1.0])
    u = np.array([0.0, 0.1, 0.5, 0.9, 0.999])
    x = sample_location(loc, u)
    assert np.all((x >= 0.0) & (x < 1.0))
    assert np.allclose(loc.cdf(x), u, atol=1e-12)


def test_distance_is_clockwise():
    assert distance(0.2, 0.7) == pytest.approx(0.5)
    assert distance(0.7, 0.2) == pytest.approx(0.5)
    assert distance(0.9, 0.1) == pytest.approx(0.2)
    assert distance(0.3, 0.3) == 0.0


def test_batch_size_distributions():
    pair = BatchSizeDistribution.deterministic(2)
    assert pair.mean == 2.0
    assert pair.factorial_moment == 2.0
    assert pair.mean_ratio == pytest.approx(2.0 / 3.0)
    assert pair.pgf(0.5) == pytest.approx(0.25)
    assert pair.pgf_prime(0.5) == pytest.approx(1.0)

    mixed = BatchSizeDistribution.from_pmf({1: 0.5, 3: 0.5})
    assert mixed.mean == pytest.approx(2.0)
    assert mixed.k_max == 3
    assert mixed.mean_inverse == pytest.approx(0.5 * 0.5 + 0.5 * 0.25)

    with pytest.raises(InvalidConfig):
        BatchSizeDistribution.from_pmf([0.5, 0.4])
    with pytest.raises(InvalidConfig):
        BatchSizeDistribution.deterministic(0)


def test_shifted_poisson_moments():
    batch = BatchSizeDistribution.shifted_poisson(3.0)
    assert batch.mean == pytest.approx(3.0, abs=1e-9)
    # K = 1 + N, N ~ Poisson(2): E[K(K-1)] = E[N] + E[N^2] = 2 + 6
    assert batch.factorial_moment == pytest.approx(8.0, abs=1e-8)
    assert BatchSizeDistribution.shifted_poisson(1.0).is_single


def test_service_time_transforms():
    expo = ServiceTimeDistribution.exponential(0.2)
    assert expo.mean == pytest.approx(5.0)
    assert expo.second_moment == pytest.approx(50.0)
    assert expo.lst(0.1) == pytest.approx(2.0 / 3.0)

    fixed = ServiceTimeDistribution.deterministic(1.0)
    assert fixed.lst(0.5) == pytest.approx(math.exp(-0.5))
    assert fixed.residual_mean == pytest.approx(0.5)

    # mean 1, second moment 2: gamma(1, 1) is the unit exponential
    gamma = ServiceTimeDistribution.from_moments(1.0, 2.0)
    assert gamma.lst(1.0) == pytest.approx(0.5)
    with pytest.raises(InvalidConfig):
        ServiceTimeDistribution.from_moments(1.0, 0.5)


def test_system_parameters_load_and_server_density(s0):
    assert s0.rho == pytest.approx(0.5)
    assert s0.mean_cycle == pytest.approx(2.0)
    assert server_location_density(s0, 0.3) == pytest.approx(1.0)

    linear = s0.with_location(LocationDensity.polynomial([0.5, 1.0]))
    assert server_location_density(linear, 0.0) == pytest.approx(0.75)

    assert s0.with_load(0.25).lam == pytest.approx(0.25)
    with pytest.raises(UnstableSystem):
        make_params(lam=1.0)
    with pytest.raises(UnstableSystem):
        s0.with_load(1.0)
    with pytest.raises(InvalidConfig):
        make_params(alpha=0.0)


DENSITIES = {
    "uniform": LocationDensity.uniform(),
    "linear": LocationDensity.polynomial([0.5, 1.0]),
    "piecewise": LocationDensity.piecewise([(0.0, (1.5,)), (0.5, (0.5,))]),
    "interval": LocationDensity.interval(0.25, 0.75),
    "class_based": LocationDensity.class_based([0.5, 0.3, 0.2], [0.2, 0.3, 0.5]),
    "beta": LocationDensity.beta(3.0, 3.0),
    "floored": LocationDensity.interval(0.25, 0.75).with_floor(0.1),
}


@pytest.mark.parametrize("name", sorted(DENSITIES))
def test_sampling_matches_the_cdf(name):
    loc = DENSITIES[name]
    u = np.random.default_rng(2024).random(1_000_000)
    result = stats.kstest(sample_location(loc, u), loc.cdf)
    assert result.statistic < 0.005


@pytest.mark.parametrize("name", sorted(DENSITIES))
def test_arcs_both_ways_cover_the_circle(name):
    loc = DENSITIES[name]
    for a, b in [(0.0, 0.5), (0.1, 0.9), (0.7, 0.2), (0.33, 0.34)]:
        assert circular_integral(loc, a, b) + circular_integral(loc, b, a) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name", sorted(DENSITIES))
@pytest.mark.parametrize("rho", [0.2, 0.9])
def test_server_location_density_integrates_to_one(name, rho):
    params = make_params(location=DENSITIES[name]).with_load(rho)
    cuts = [start for start, _ in params.location.segments]
    total = integrate(lambda y: server_location_density(params, y), 0.0, 1.0, breakpoints=cuts)
    assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize(
    "batch",
    [
        BatchSizeDistribution.deterministic(1),
        BatchSizeDistribution.deterministic(3),
        BatchSizeDistribution.from_pmf({1: 0.2, 2: 0.5, 4: 0.3}),
        BatchSizeDistribution.shifted_poisson(3.0),
        BatchSizeDistribution.shifted_poisson(15.0),
    ],
)
def test_generating_function_identities(batch):
    assert batch.pgf(1.0) == pytest.approx(1.0, abs=1e-12)
    assert batch.pgf_prime(1.0) == pytest.approx(batch.mean, abs=1e-10)
    assert batch.pgf_second(1.0) == pytest.approx(batch.factorial_moment, abs=1e-8)
