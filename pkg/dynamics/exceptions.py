"""Errors raised by the estimators and the batch runner"""
from typing import Optional


class DynamicsError(ValueError):
    """Base class for every estimator error."""


class WindowError(DynamicsError):
    """A coordinate outside the stored window was needed."""

    def __init__(self, message: str, required: Optional[tuple] = None):
        super().__init__(message)
        self.required = required


class BudgetExceeded(DynamicsError):
    """An enumeration or exact search ran past its configured budget."""

    def __init__(self, message: str, needed: Optional[int] = None):
        super().__init__(message)
        self.needed = needed


class CoverageError(DynamicsError):
    """A cover does not cover its reference sample."""


class MassUnavailable(DynamicsError):
    """No exact mass oracle and no sampling budget."""


class IncompatibleSpec(DynamicsError):
    """A measure or cover spec does not fit the system kind."""


class InsufficientData(DynamicsError):
    """Too few ladder entries to extract a rate."""


class ConfigError(DynamicsError):
    """Invalid experiment config; `line` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
