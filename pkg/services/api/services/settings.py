"""Process-level settings read from the environment."""

from __future__ import annotations

import logging
import os

from .errors import InvalidConfig

THREADS_ENV = "POLLING_THREADS"
LOG_LEVEL_ENV = "POLLING_LOG_LEVEL"


def worker_count() -> int:
    """Parallel workers for sweeps and replications; POLLING_THREADS caps it."""
    raw = os.getenv(THREADS_ENV, "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise InvalidConfig(f"{THREADS_ENV} must be a positive integer, got '{raw}'") from None
    if value < 1:
        raise InvalidConfig(f"{THREADS_ENV} must be a positive integer, got '{raw}'")
    return value


def log_level(verbose: int = 0) -> int:
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    name = os.getenv(LOG_LEVEL_ENV, "WARNING").strip().upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.WARNING
