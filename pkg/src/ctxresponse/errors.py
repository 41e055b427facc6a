"""Exception types.

Two families: ``InputError`` (bad arguments, maps to CLI exit code 2) and
``NumericalError`` (a computation could not be trusted, exit code 3).
"""


class CtxError(Exception):
    """Base class for all package errors."""


class InputError(CtxError, ValueError):
    pass


class NumericalError(CtxError, ArithmeticError):
    pass


# -- input errors
class NotHermitian(InputError):
    pass


class NotUnitary(InputError):
    pass


class NotDensityMatrix(InputError):
    pass


class NotPure(InputError):
    pass


class NotCyclic(InputError):
    pass


class BadPanelCount(InputError):
    pass


class BadWeights(InputError):
    pass


class DimMismatch(InputError):
    pass


class BadMixingParameter(InputError):
    pass


class BadC(InputError):
    pass


class BadInputRange(InputError):
    pass


class NonPositiveG(InputError):
    pass


class BadPOVM(InputError):
    pass


class DeltaTooLarge(InputError):
    pass


class UnknownLabel(InputError, KeyError):
    pass


class BadParameters(InputError):
    pass


class ParseError(InputError):
    pass


class ValidationError(InputError):
    pass


# -- numerical errors
class NoConvergence(NumericalError):
    pass


class BranchAmbiguity(NumericalError):
    pass


class StepCountTooSmall(NumericalError):
    pass


class ImaginaryResidue(NumericalError):
    pass


class Infeasible(NumericalError):
    pass


class TooFewPoints(NumericalError):
    pass


class LemmaFailed(NumericalError):
    pass


class DegenerateProbability(NumericalError):
    pass


class UnstableLimit(NumericalError):
    pass
