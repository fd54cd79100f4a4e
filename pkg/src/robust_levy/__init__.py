"""Numerical lab for robust limit theorems of nonlinear stable-type Lévy processes."""

from .errors import (AuditFailure, CFLViolation, ConfigError, CoverageError, DomainError,
                     InfeasibleCore, MemoryBudgetError, RobustLevyError, ToleranceUnreachable)
from .stable_measure import (MeasureClass, QuadratureConfig, StableLevyMeasure, apply_generator,
                             interval_mass, kappa, small_second_moment, tail_first_moment)
from .sublinear import (Axis, DiscreteDistribution, DistributionFamily, GridFunction, expect,
                        iid_compose, sublinearity_audit)
from .uncertainty import LevyTriplet, UncertaintySetBox, g_function, hamiltonian

__version__ = "0.1.0"

__all__ = [
    "AuditFailure", "Axis", "CFLViolation", "ConfigError", "CoverageError",
    "DiscreteDistribution", "DistributionFamily", "DomainError", "GridFunction",
    "InfeasibleCore", "LevyTriplet", "MeasureClass", "MemoryBudgetError",
    "QuadratureConfig", "RobustLevyError", "StableLevyMeasure", "ToleranceUnreachable",
    "UncertaintySetBox", "apply_generator", "expect", "g_function", "hamiltonian",
    "iid_compose", "interval_mass", "kappa", "small_second_moment",
    "sublinearity_audit", "tail_first_moment",
]
