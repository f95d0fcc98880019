"""Pressure, information and cavity estimators for subshifts on virtually Z^d groups."""

__version__ = "0.1.0"

from .errors import (CavityPressError, InsufficientCollarError, InvariantViolation, NonConvergenceError,
                     PreconditionError, ReducibleError, ResourceBudgetError, SpecParseError, ZeroProbabilityError)
from .group_core import FolnerSchedule, GroupDescriptor, GroupPoint
from .intervals import Interval, ProbInterval
from .potential import Interaction, hardcore, ising, zero
from .subshift import Alphabet, Pattern, SftSpec, full_shift, golden_mean, no01_1d

__all__ = [
    "__version__", "CavityPressError", "InsufficientCollarError", "InvariantViolation", "NonConvergenceError",
    "PreconditionError", "ReducibleError", "ResourceBudgetError", "SpecParseError", "ZeroProbabilityError",
    "FolnerSchedule", "GroupDescriptor", "GroupPoint", "Interval", "ProbInterval", "Interaction", "hardcore",
    "ising", "zero", "Alphabet", "Pattern", "SftSpec", "full_shift", "golden_mean", "no01_1d",
]
