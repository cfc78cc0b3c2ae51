"""Multifractional invariance principles: exact covariances, limit kernels and checks."""

from .errors import (ConfigError, EstimationError, MfError, NotPSDError, NumericalError,
                     QuadratureError, SizeLimitError, UnsupportedProfileError)
from .fields import FieldModel, farima_cov, fwn_cov
from .hprofile import HurstProfile
from .kernels import FARIMA, FWN, AsymptoticCovariance, LimitKernel, field_cov, limit_cov
from .specialfn import HurstPair, c_norm, d_coef, log_gamma

__version__ = "0.1.0"

__all__ = [
    "AsymptoticCovariance", "ConfigError", "EstimationError", "FARIMA", "FWN", "FieldModel",
    "HurstPair", "HurstProfile", "LimitKernel", "MfError", "NotPSDError", "NumericalError",
    "QuadratureError", "SizeLimitError", "UnsupportedProfileError", "c_norm", "d_coef",
    "farima_cov", "field_cov", "fwn_cov", "limit_cov", "log_gamma",
]
