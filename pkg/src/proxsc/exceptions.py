"""Exception types shared across the package."""


class ProxscError(Exception):
    """Base class for all user-facing errors."""


class DataError(ProxscError):
    """Malformed or inconsistent input data."""


class ConfigError(ProxscError):
    """Invalid configuration or option combination."""


class IdentificationError(ProxscError):
    """Order/rank condition failure: parameters not identified."""


class NumericsError(ProxscError):
    """Numerical failure (overflow, non-finite values) during evaluation."""


class GridError(ProxscError):
    """Hypothesis grid does not bracket the conformal interval."""
