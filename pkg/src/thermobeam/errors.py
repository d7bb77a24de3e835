class ThermobeamError(Exception):
    """Base class for package errors."""


class ConfigurationError(ThermobeamError, ValueError):
    """Invalid parameters, grid sizes or run configuration."""


class SingularSystemError(ThermobeamError, ArithmeticError):
    """A resolvent or stationary system could not be factorized."""

    def __init__(self, msg, lam=None):
        super().__init__(msg)
        self.lam = lam
