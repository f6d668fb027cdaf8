"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`ImpatienceError`, so callers (and the CLI) can separate
domain failures from programming errors.
"""

from __future__ import annotations


class ImpatienceError(Exception):
    """Base class for all library errors."""


class InvalidInput(ImpatienceError, ValueError):
    """Malformed input: wrong shape, range or type."""


class TooShort(InvalidInput):
    pass


class NonPositiveValue(InvalidInput):
    pass


class NotDecreasing(InvalidInput):
    pass


class NotNormalized(InvalidInput):
    pass


class ParamOutOfRange(InvalidInput):
    pass


class HorizonMismatch(InvalidInput):
    pass


class DateBeyondHorizon(InvalidInput):
    pass


class PeriodOutOfRange(InvalidInput):
    pass


class BadPremiseOrder(InvalidInput):
    pass


class SizeMismatch(InvalidInput):
    pass


class DimensionMismatch(InvalidInput):
    pass


class InvalidWeights(InvalidInput):
    pass


class InvalidAllocation(InvalidInput):
    pass


class HorizonExhausted(InvalidInput):
    pass


class FormatError(InvalidInput):
    """A CSV or JSON document could not be parsed."""


class PropertyFailure(ImpatienceError):
    """Input is well formed but lacks a property an operation requires."""


class NotDecreasingImpatience(PropertyFailure):
    pass


class NotStrictlyDecreasing(PropertyFailure):
    pass


class TailRatioTooCloseToOne(PropertyFailure):
    pass


class NotConcave(PropertyFailure):
    pass


class BadBoundary(PropertyFailure):
    pass


class AllWeightsZero(PropertyFailure):
    pass


class EmptySupport(PropertyFailure):
    pass


class NoConvergence(ImpatienceError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    Attributes
    ----------
    residual:
        The best residual reached, reported so callers never mistake a
        partial answer for an equilibrium.
    iterations:
        Number of iterations performed.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
