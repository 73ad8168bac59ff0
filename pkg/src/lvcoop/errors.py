"""Exception hierarchy shared by all modules."""


class LVError(Exception):
    """Base class for all errors raised by lvcoop."""


class ParameterError(LVError, ValueError):
    """An argument is outside its admissible range."""


class DataError(LVError, ValueError):
    """Input data are unusable (non-finite samples, empty series, ...)."""


class ConfigError(LVError, ValueError):
    """A configuration document is malformed."""


class ExpressionError(ConfigError):
    """A coefficient expression does not parse under the fixed grammar."""


class DomainError(LVError, ValueError):
    """A request falls outside the domain where the quantity is defined."""

    def __init__(self, message, blowup_time=None):
        super().__init__(message)
        self.blowup_time = blowup_time


class NumericalError(LVError, RuntimeError):
    """A numerical procedure failed (non-convergence, singular solve)."""
