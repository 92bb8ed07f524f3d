"""Semantic exception hierarchy.

Callers can distinguish bad inputs (recoverable, exit code 1 in the CLI)
from numeric or verification failures (exit code 2).
"""


class EmapError(Exception):
    """Base class for all library errors."""


class InputError(EmapError, ValueError):
    """Malformed or inconsistent inputs: shape mismatches, bad flags, parse errors."""


class NumericError(EmapError, ArithmeticError):
    """Non-finite values, solver non-convergence, or failed numeric verification."""


class CapabilityError(EmapError):
    """Request exceeds a documented size or capability limit."""


class UndefinedMetricError(EmapError):
    """Metric undefined for the given inputs (e.g. AUC with a single class)."""


class TrainingError(EmapError):
    """Model training diverged or the data is degenerate for the method."""


class GenerationError(EmapError):
    """Synthetic data generation could not satisfy its constraints."""
