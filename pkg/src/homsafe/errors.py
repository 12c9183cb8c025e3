"""Exception hierarchy shared by every module of the package."""


class HomsafeError(Exception):
    """Base class for all package errors."""


class InvalidInput(HomsafeError, ValueError):
    pass


class NotPositiveDefinite(HomsafeError, ValueError):
    pass


class SingularMatrix(HomsafeError, ValueError):
    pass


class UseFallback(HomsafeError):
    """A closed-form formula is not applicable; the caller should switch method."""


class InvalidContext(HomsafeError, ValueError):
    pass


class UndefinedAtOrigin(HomsafeError, ValueError):
    pass


class NotInInterior(HomsafeError, ValueError):
    pass


class InternalError(HomsafeError, RuntimeError):
    pass


class DiagonalInfeasible(InternalError):
    """No positive diagonal shape matrix satisfies both LMIs for this order."""


class DegenerateDenominator(HomsafeError, ArithmeticError):
    pass


class InvalidCallOrder(HomsafeError, RuntimeError):
    pass


class DivergenceDetected(HomsafeError, RuntimeError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ScenarioParseError(HomsafeError, ValueError):
    pass
