"""Exception hierarchy shared by all papaya modules."""


class PapayaError(Exception):
    """Base class for every error raised by this package."""


class ProfileFormatError(PapayaError, ValueError):
    """A profile file could not be parsed or failed validation."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FitError(PapayaError):
    """A linear fit could not be produced."""


class SingularFitError(FitError):
    """All x values used for a fit are identical."""


class KneeDetectionError(FitError):
    """No suffix of the latency profile is linear enough."""

    def __init__(self, message, best_start=None, best_r_squared=None):
        self.best_start = best_start
        self.best_r_squared = best_r_squared
        super().__init__(message)


class InfeasibleError(PapayaError):
    """The memory budget cannot hold even a single record."""


class UndefinedPointError(PapayaError):
    """The throughput threshold is undefined because the fixed latency is zero."""


class ConsistencyError(PapayaError):
    """An internal monotonicity or agreement check failed."""
