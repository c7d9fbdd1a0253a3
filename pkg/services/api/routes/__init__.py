from . import analysis, simulation  # noqa: F401
