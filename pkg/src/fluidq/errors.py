"""Exception hierarchy.

Model-construction problems derive from ``ModelError``; everything that can
go wrong while evaluating a formula derives from ``NumericalError``.
"""


class FluidQError(Exception):
    """Base class for all package errors."""


class ModelError(FluidQError, ValueError):
    pass


class BadRates(ModelError):
    pass


class IntegerOutputRate(ModelError):
    pass


class UnstableModel(ModelError):
    pass


class DomainError(FluidQError, ValueError):
    pass


class NumericalError(FluidQError, ArithmeticError):
    pass


class NegativeTime(DomainError):
    pass


class WrongRegion(NumericalError):
    pass


class OnCaustic(NumericalError):
    pass


class NearCaustic(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NoRoot(NumericalError):
    pass


class TruncationFailure(NumericalError):
    pass


class ExpansionBreakdown(NumericalError):
    """The leading-order correction exceeds the quantity it corrects."""


class EigenFailure(NumericalError):
    pass


class ModeCountMismatch(EigenFailure):
    pass


class IllConditioned(NumericalError):
    pass


class OutOfRange(DomainError):
    pass
