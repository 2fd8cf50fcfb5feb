class ManifoldControlError(Exception):
    """Base class for package errors."""


class DomainError(ManifoldControlError, ValueError):
    """An input violates a documented precondition or invariant."""


class IntegrationAccuracyError(ManifoldControlError, ArithmeticError):
    """Norm drift exceeded tolerance; retry with a smaller time step."""


class NumericalAccuracyError(ManifoldControlError, ArithmeticError):
    """A numerical result fell outside its guaranteed range."""
