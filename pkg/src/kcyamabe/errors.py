"""Exception hierarchy shared by all modules."""


class KCError(ArithmeticError):
    """Base class for numerical failures raised by this package."""


# integrator
class StepUnderflow(KCError):
    pass


class MaxStepsExceeded(KCError):
    pass


class NonFiniteState(KCError):
    pass


class NoSignChange(KCError):
    pass


# root finding / shooting
class InvalidBracket(KCError):
    pass


class NoConvergence(KCError):
    pass


class BracketNotFound(KCError):
    pass


class InnerBracketFail(KCError):
    pass


class BlowUp(KCError):
    pass


# geometry / profile
class DegenerateProfile(KCError):
    pass


class NoMinimumFound(KCError):
    pass


class BoundaryViolation(KCError):
    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = violations or {}


class OutOfDomain(KCError, ValueError):
    pass


class EndpointSingularity(KCError):
    pass


class NonPositiveTestFunction(KCError, ValueError):
    pass
