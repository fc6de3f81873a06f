"""Exception hierarchy shared by every module."""


class TwosqError(Exception):
    """Base class for all library errors."""


class NotCoprime(TwosqError, ValueError):
    pass


class LimitExceeded(TwosqError, ValueError):
    pass


class NotPositiveDefinite(TwosqError, ValueError):
    pass


class NonIntegralStar(TwosqError, ArithmeticError):
    pass


class NoValidInverse(TwosqError, ArithmeticError):
    pass


class EvenModulus(TwosqError, ValueError):
    pass


class ToleranceNotMet(TwosqError, RuntimeError):
    pass


class PrecisionExhausted(TwosqError, RuntimeError):
    pass


class SearchExhausted(TwosqError, RuntimeError):
    pass


class IndeterminateComparison(TwosqError, RuntimeError):
    pass


class DecompositionMismatch(TwosqError, AssertionError):
    """Raised when S differs from T1 + T2 by more than the budget.

    ``breakdown`` maps each divisor k of q to its spectral contribution.
    """

    def __init__(self, message, breakdown=None):
        super().__init__(message)
        self.breakdown = breakdown or {}
