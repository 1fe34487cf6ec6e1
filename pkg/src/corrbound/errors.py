"""Exception types shared across the package."""


class CorrboundError(Exception):
    """Base class for all package errors."""


class ConfigError(CorrboundError):
    """Bad user configuration (CLI exit code 1)."""


class ModelBuildError(CorrboundError):
    """Model construction failed or model lacks a required capability (exit 2)."""


class NumericalError(CorrboundError):
    """Numerical failure during a computation (exit 3)."""


class SingularMatrixError(NumericalError):
    """A matrix that must be inverted is singular or too ill-conditioned."""

    def __init__(self, message: str, rcond: float | None = None):
        if rcond is not None:
            message = f"{message} (reciprocal condition estimate {rcond:.3e})"
        super().__init__(message)
        self.rcond = rcond


class InvariantViolationError(NumericalError):
    """A quantity left its mathematically guaranteed region (e.g. lost PSD-ness)."""
