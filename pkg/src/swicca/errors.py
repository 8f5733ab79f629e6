"""Exception types shared across the package.

The CLI maps each family to an exit code, so library code raises these rather
than bare ``ValueError``.
"""


class SwiccaError(Exception):
    """Base class for all package errors."""


class InputError(SwiccaError, ValueError):
    """Malformed or non-finite input data."""


class ConfigError(SwiccaError, ValueError):
    """Invalid configuration (ranks, window sizes, step constants)."""


class NumericError(SwiccaError, ArithmeticError):
    """An iterative routine failed to converge."""


class RankError(NumericError):
    """A matrix is numerically rank deficient where full rank is required."""


class NotReady(SwiccaError):
    """An estimator was queried before it has seen enough samples."""
