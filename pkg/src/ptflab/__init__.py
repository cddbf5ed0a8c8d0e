"""Constructive toolkit for hardness-of-learning reductions to low-degree PTFs."""

from .errors import CapacityError, ConfigError, DegenerateInputError, InputError, NumericError, PtfLabError
from .poly import Polynomial, evaluate, evaluate_many, sign

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "ConfigError", "DegenerateInputError", "InputError", "NumericError", "PtfLabError",
    "Polynomial", "evaluate", "evaluate_many", "sign", "__version__",
]
