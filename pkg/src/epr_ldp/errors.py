"""Exception taxonomy shared across the package."""

__all__ = [
    "EprLdpError",
    "DimensionError",
    "DataError",
    "DomainError",
    "ReversibilityError",
    "NumericError",
    "ConfigError",
]


class EprLdpError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(EprLdpError, ValueError):
    """Matrix/vector shapes are non-square or mutually inconsistent."""


class DataError(EprLdpError, ValueError):
    """Inputs contain NaN/Inf or are not numeric."""


class DomainError(EprLdpError, ValueError):
    """Argument lies outside the mathematical domain of the operation."""


class ReversibilityError(EprLdpError, ValueError):
    """The drift is (numerically) symmetric: entropy production degenerates
    and large-deviation objects built on rotation channels are undefined."""


class NumericError(EprLdpError, RuntimeError):
    """A numerical routine failed or produced an internally inconsistent
    result (eigensolver non-convergence, singular symmetric part, failed
    reconstruction)."""


class ConfigError(EprLdpError, ValueError):
    """Malformed run configuration or unknown option value."""
