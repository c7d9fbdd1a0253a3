from .errors import PollingError  # noqa: F401
