"""Exception hierarchy shared by every module."""


class MmdError(Exception):
    """Base class for all errors raised by :mod:`mmdvar`."""


class InputError(MmdError, ValueError):
    """Malformed numeric input (shape mismatch, NaN/inf, empty)."""


class InsufficientSampleError(MmdError, ValueError):
    """Too few observations for the requested estimator."""


class BandwidthUndefinedError(MmdError, ValueError):
    """Median heuristic cannot produce a positive bandwidth."""


class UnsupportedFamilyError(MmdError, ValueError):
    """Operation is only defined for a specific kernel family."""


class UnsortedInputError(MmdError, ValueError):
    """A routine that requires sorted univariate input received unsorted data."""


class ConfigError(MmdError, ValueError):
    """Invalid experiment or run configuration."""


class IngestionError(MmdError, ValueError):
    """A data file could not be parsed into a sample."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ReplicateError(MmdError):
    """An estimator failed inside a Monte Carlo replicate."""

    def __init__(self, replicate: int, cause: Exception):
        self.replicate = replicate
        self.cause = cause
        super().__init__(f"replicate {replicate}: {type(cause).__name__}: {cause}")
