from pathlib import Path
import sys

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from services.api.services.model_core import (  # noqa: E402
    BatchSizeDistribution,
    LocationDensity,
    ServiceTimeDistribution,
    SystemParameters,
)

SCENARIOS = ROOT / "contrib" / "scenarios"


def make_params(lam=0.5, alpha=1.0, size=1, service=1.0, location=None):
    return SystemParameters(
        lam=lam,
        alpha=alpha,
        batch=BatchSizeDistribution.deterministic(size),
        service=ServiceTimeDistribution.deterministic(service),
        location=location or LocationDensity.uniform(),
    )


@pytest.fixture
def s0():
    """α = 1, λ = 0.5, K ≡ 1, B ≡ 1, uniform locations."""
    return make_params()


@pytest.fixture
def k2():
    """Pairs on a uniform circle at ρ = 0.5."""
    return make_params(lam=0.25, size=2)


@pytest.fixture
def linear_poisson():
    return SystemParameters(
        lam=0.0,
        alpha=1.0,
        batch=BatchSizeDistribution.shifted_poisson(3.0),
        service=ServiceTimeDistribution.deterministic(1.0),
        location=LocationDensity.polynomial([0.5, 1.0]),
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long simulations and fine grids (deselect with -m 'not slow')")
