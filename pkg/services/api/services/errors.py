"""Exception hierarchy shared by the analysis library, the CLI and the HTTP API."""

from __future__ import annotations


class PollingError(Exception):
    """Base class; ``kind`` is the machine-readable tag printed by the CLI."""

    kind = "polling_error"


class InvalidConfig(PollingError):
    kind = "invalid_config"


class UnstableSystem(PollingError):
    kind = "unstable_system"


class NonPositiveDensity(PollingError):
    kind = "non_positive_density"


class RegularityViolation(PollingError):
    kind = "regularity_violation"


class GridMismatch(PollingError):
    kind = "grid_mismatch"
