"""
Custom exceptions for ScatterLab.
"""
from typing import Any


class ScatteringError(Exception):
    """Base exception for ScatterLab.

    Keyword arguments are kept in ``details`` so callers higher up the stack
    can attach context (for example the incidence index of a failing column).
    """

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message)
        self.message = message
        self.details = dict(details)

    def __str__(self) -> str:
        if not self.details:
            return self.message
        extra = ", ".join(f"{key}={value}" for key, value in sorted(self.details.items()))
        return f"{self.message} ({extra})"


class ConfigurationError(ScatteringError):
    """Raised when there's a configuration error."""
    pass


class ValidationError(ScatteringError):
    """Raised when validation of an experiment or scene fails."""

    def __init__(self, message: str = "", errors=None, **details: Any):
        self.errors = list(errors or [])
        if self.errors and not message:
            message = "; ".join(self.errors)
        super().__init__(message, **details)


class DegenerateCurveError(ScatteringError):
    """Raised when a parametric curve has a non-positive radius or bad orientation."""
    pass


class DomainError(ScatteringError):
    """Raised when an argument lies outside the domain of an operation."""
    pass


class SingularityError(ScatteringError):
    """Raised when source and target points coincide."""
    pass


class ResonanceError(ScatteringError):
    """Raised when a linear system is singular."""
    pass


class ConvergenceError(ScatteringError):
    """Raised when an iterative solver fails to converge."""

    def __init__(self, message: str = "", residual: float = float("nan"),
                 iterations: int = 0, **details: Any):
        super().__init__(message, residual=residual, iterations=iterations, **details)
        self.residual = residual
        self.iterations = iterations


class UsageError(ScatteringError):
    """Raised when operations are combined inconsistently."""
    pass


class ArtifactError(ScatteringError):
    """Raised when reading or writing an artifact file fails."""
    pass
