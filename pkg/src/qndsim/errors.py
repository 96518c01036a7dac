"""Exception hierarchy shared by the simulator modules."""


class QndSimError(Exception):
    """Base class for all errors raised by qndsim."""


class ParameterDomainError(QndSimError, ValueError):
    """A physical parameter lies outside the domain where the model is defined."""

    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


class ConsistencyError(QndSimError):
    """An assembled map or channel violates one of its structural invariants."""


class NumericalError(QndSimError, ArithmeticError):
    """A computation produced non-finite values or failed to converge."""


class TruncationError(QndSimError):
    """A Fock-space truncation is too small for the requested accuracy."""


class ConfigError(QndSimError, ValueError):
    """A run configuration could not be parsed or validated."""
