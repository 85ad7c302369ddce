"""Numerical study of the semi-classical, non-relativistic limit of the
Chern-Simons-Higgs system towards the Euler-Chern-Simons system on a torus."""
from .errors import (
    BaselineError,
    BlowUpError,
    ConfigError,
    ConvergenceError,
    CshLabError,
    DomainError,
    FitError,
    GridMismatchError,
    RegimeError,
    UnsupportedDataError,
)
from .grid import FieldGrid
from .scaling import ScalingParams

__all__ = [
    "BaselineError",
    "BlowUpError",
    "ConfigError",
    "ConvergenceError",
    "CshLabError",
    "DomainError",
    "FieldGrid",
    "FitError",
    "GridMismatchError",
    "RegimeError",
    "ScalingParams",
    "UnsupportedDataError",
]

__version__ = "0.1.0"
