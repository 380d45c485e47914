"""Waveholtz fixed-point iteration for the free-space Helmholtz equation."""

from .errors import (ConfigError, ConvergenceError, DomainError, InstabilityError,
                     QuadratureError, TruncationError, WaveholtzError)
from .fields import Field, GaussianProfile, Grid, NormSpec
from .transfer import KernelSpec, beta_closed

__all__ = [
    "ConfigError", "ConvergenceError", "DomainError", "InstabilityError",
    "QuadratureError", "TruncationError", "WaveholtzError",
    "Field", "GaussianProfile", "Grid", "NormSpec", "KernelSpec", "beta_closed",
]
__version__ = "0.1.0"
