"""Exception types. The CLI maps these onto exit codes."""


class MfError(Exception):
    """Base class for all package errors."""

    tag = "error"


class ConfigError(MfError, ValueError):
    tag = "config"

    def __init__(self, message, path=""):
        super().__init__(message)
        self.path = path


class UnsupportedProfileError(MfError, ValueError):
    tag = "profile"


class NumericalError(MfError, ArithmeticError):
    tag = "numerical"


class QuadratureError(NumericalError):
    tag = "quadrature"


class NotPSDError(NumericalError):
    tag = "not-psd"


class SizeLimitError(MfError, ValueError):
    tag = "size-limit"


class EstimationError(NumericalError):
    tag = "estimation"
