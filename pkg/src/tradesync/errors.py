"""Exception types shared across the package."""


class TradesyncError(Exception):
    """Base class for all package errors."""


class ConfigError(TradesyncError):
    """Bad or inconsistent configuration (missing column, invalid policy, ...)."""


class DataError(TradesyncError):
    """Input data violates a hard invariant (bad quotes, off-calendar trade, ...)."""


class DegenerateInputError(TradesyncError):
    """A statistic is undefined for this input (zero variance, empty series, ...)."""


class GenerationError(TradesyncError):
    """The synthetic generator cannot satisfy the requested configuration."""
