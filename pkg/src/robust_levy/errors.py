"""Exception types shared across the package.

Each class maps to one failure mode a caller may want to catch separately;
the CLI translates them into exit codes.
"""


class RobustLevyError(Exception):
    """Base class for all package errors."""


class DomainError(RobustLevyError, ValueError):
    """An argument lies outside the domain of an operation."""


class ToleranceUnreachable(RobustLevyError):
    """No admissible truncation radius meets the requested tail tolerance."""


class CoverageError(RobustLevyError):
    """A grid is too small for the shifts or jumps it has to carry."""


class CFLViolation(RobustLevyError):
    """The explicit time step breaks the monotonicity bound."""


class MemoryBudgetError(RobustLevyError):
    """A requested grid exceeds the configured memory budget."""


class InfeasibleCore(RobustLevyError):
    """The monotone core bridge of a Pareto-tail law cannot be built."""


class AuditFailure(RobustLevyError):
    """A supplied family violates one of the limit-theorem assumptions."""


class ConfigError(RobustLevyError):
    """An experiment configuration does not validate."""
