"""Exception hierarchy shared by every module."""


class PolyfockError(Exception):
    """Base class for all errors raised by polyfock."""


class DomainError(PolyfockError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(PolyfockError, ValueError):
    """Request outside the region where the truncated model is trustworthy."""


class CapabilityError(PolyfockError):
    """Request exceeds a configured capacity (degree, size)."""


class NumericError(PolyfockError, ArithmeticError):
    """Non-finite values or a failing numerical kernel."""


class AccuracyError(PolyfockError):
    """A computed quantity failed its own accuracy self-check."""
