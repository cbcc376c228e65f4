"""Exception hierarchy shared by all levelfit modules."""

from __future__ import annotations


class LevelfitError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(LevelfitError, ValueError):
    """A value is outside its mathematical domain (n <= 0, p outside (0,1), ...)."""


class SchemaError(LevelfitError):
    """Input data does not match the expected column/field schema."""


class ParseError(LevelfitError):
    """A row of input telemetry could not be parsed."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(f"row {row}: {message}" if row is not None else message)
        self.row = row


class DataError(LevelfitError):
    """Observations violate the data contract (out-of-range moves, ...)."""


class MixedLevelError(DataError):
    """Records from more than one level were passed where one level is required."""


class EmptyLevelError(DataError):
    """A level has no retained attempts at all."""


class UnfittableError(LevelfitError):
    """The empirical histogram is empty, so there is nothing to fit."""


class NumericFitError(LevelfitError):
    """The optimizer produced non-finite values; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class FitFailedError(LevelfitError):
    """Every start of the initial-guess search failed numerically."""


class UnusableFitError(LevelfitError):
    """A prediction was requested from a non-converged fit."""


class InsufficientDataError(LevelfitError):
    """A regression was asked for with fewer usable points than it needs."""


class DegenerateRegressorError(LevelfitError):
    """The regressor has no variation, so the slope is undefined."""


class DegenerateCoefficientsError(LevelfitError):
    """Correction coefficients cannot be inverted (zero slope)."""


class SpecError(LevelfitError):
    """A synthetic-data spec violates one of its invariants."""
