"""Exception hierarchy.

Two families: :class:`ValidationError` for inputs outside an operation's
preconditions (CLI exit code 2) and :class:`NumericalFailure` for faults
detected while computing (CLI exit code 3).
"""


class MchlabError(Exception):
    exit_code = 1


class ValidationError(MchlabError, ValueError):
    exit_code = 2


class NumericalFailure(MchlabError, ArithmeticError):
    exit_code = 3


class SpeedOutOfWindow(ValidationError):
    pass


class SpeedOrdering(ValidationError):
    pass


class DegenerateSpeeds(ValidationError):
    pass


class SqrtDomain(ValidationError):
    pass


class RangeExceeded(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class DegenerateInput(ValidationError):
    pass


class SingularJacobian(ValidationError):
    pass


class NonMonotoneMap(NumericalFailure):
    pass


class PositivityViolated(NumericalFailure):
    pass


class EigensolverFailure(NumericalFailure):
    pass


class PositivityLost(NumericalFailure):
    pass


class BlowUp(NumericalFailure):
    pass


class OptimizerStall(NumericalFailure):
    pass
