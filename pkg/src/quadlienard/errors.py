"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each class carries the code it
should surface as.
"""


class QuadLienardError(Exception):
    exit_code = 1


class ParseError(QuadLienardError, ValueError):
    exit_code = 2


class PreconditionError(QuadLienardError, ValueError):
    """An input violates a stated precondition (the message names it)."""

    exit_code = 3


class NumericError(QuadLienardError, ArithmeticError):
    exit_code = 4


# algebra
class ZeroPolynomial(PreconditionError):
    pass


class PoleInInterval(PreconditionError):
    pass


# reduction
class DegenerateFirstEquation(PreconditionError):
    pass


class QDegenerate(PreconditionError):
    pass


# analysis
class NotAnEquilibrium(PreconditionError):
    pass


class NonIsolatedEquilibrium(PreconditionError):
    pass


class NoZeroNearby(NumericError):
    pass


class ConditionsViolated(PreconditionError):
    pass


class NoBalancedPair(NumericError):
    pass


# numerics
class StepSizeUnderflow(NumericError):
    pass


class NoReturn(NumericError):
    pass


# plotting
class UnknownArtifact(ParseError):
    pass
