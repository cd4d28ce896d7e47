"""Separation-of-variables numerics for the twisted antiperiodic XXZ chain."""

from .errors import (
    AmbiguousNullspaceError,
    CertificationError,
    ConvergenceError,
    DegenerateSpectrumError,
    DimensionError,
    InversionError,
    ParameterError,
    SingularEvaluationError,
    SovxxzError,
)
from .model import HalfPeriodTrigPoly, ModelParams
from .sov import SovBasis, separate_state
from .spectrum import EigenRecord, solve_spectrum

__all__ = [
    "AmbiguousNullspaceError",
    "CertificationError",
    "ConvergenceError",
    "DegenerateSpectrumError",
    "DimensionError",
    "EigenRecord",
    "HalfPeriodTrigPoly",
    "InversionError",
    "ModelParams",
    "ParameterError",
    "SingularEvaluationError",
    "SovBasis",
    "SovxxzError",
    "separate_state",
    "solve_spectrum",
]

__version__ = "0.1.0"
