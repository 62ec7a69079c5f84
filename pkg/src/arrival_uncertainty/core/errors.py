"""Exception hierarchy for the arrival-time toolkit.

Every error raised on purpose by the library derives from :class:`ArrivalError`
and also from the closest builtin, so callers may catch either. Messages name
the offending quantity and the threshold it crossed.

Input problems (``ValueError`` family):
    NotHermitian, NotPositive, DimensionMismatch, NegativeTime,
    NonpositiveParameter, NonpositiveScale, RangeExceeded, GridTooCoarse,
    DegenerateGroundState, RegimeViolation, ConfigError

Numerical breakdowns (``ArithmeticError`` / ``RuntimeError`` family):
    DefectiveMatrix, NonConvergent, DivergentMoment, ZeroAbsorption,
    OptimizerFailed, HorizonTooSmall

Standing-assumption failure:
    AssumptionViolated (carries the report computed anyway)
"""

from __future__ import annotations

from typing import Any, Optional

__all__ = [
    "ArrivalError",
    "NotHermitian",
    "NotPositive",
    "DimensionMismatch",
    "NegativeTime",
    "NonpositiveParameter",
    "NonpositiveScale",
    "RangeExceeded",
    "GridTooCoarse",
    "DegenerateGroundState",
    "RegimeViolation",
    "ConfigError",
    "DefectiveMatrix",
    "NonConvergent",
    "DivergentMoment",
    "ZeroAbsorption",
    "OptimizerFailed",
    "HorizonTooSmall",
    "AssumptionViolated",
]


class ArrivalError(Exception):
    """Base class of all library errors."""


# Input validation ---------------------------------------------------------------
class NotHermitian(ArrivalError, ValueError):
    pass


class NotPositive(ArrivalError, ValueError):
    pass


class DimensionMismatch(ArrivalError, ValueError):
    pass


class NegativeTime(ArrivalError, ValueError):
    pass


class NonpositiveParameter(ArrivalError, ValueError):
    pass


class NonpositiveScale(ArrivalError, ValueError):
    pass


class RangeExceeded(ArrivalError, ValueError):
    pass


class GridTooCoarse(ArrivalError, ValueError):
    pass


class DegenerateGroundState(ArrivalError, ValueError):
    pass


class RegimeViolation(ArrivalError, ValueError):
    pass


class ConfigError(ArrivalError, ValueError):
    """Configuration document could not be turned into a system.

    ``field`` is a dotted/indexed path such as ``D[1][0]``; ``line`` is the
    1-based YAML line when the failure is syntactic.
    """

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None) -> None:
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


# Numerical breakdowns -----------------------------------------------------------
class DefectiveMatrix(ArrivalError, ArithmeticError):
    """Eigenvector basis too ill-conditioned; callers fall back to ODE propagation."""

    def __init__(self, message: str, condition: float = float("inf")) -> None:
        self.condition = condition
        super().__init__(message)


class NonConvergent(ArrivalError, RuntimeError):
    pass


class DivergentMoment(ArrivalError, ArithmeticError):
    pass


class ZeroAbsorption(ArrivalError, ArithmeticError):
    pass


class OptimizerFailed(ArrivalError, RuntimeError):
    pass


class HorizonTooSmall(ArrivalError, ValueError):
    """Sampling horizon leaves too much unabsorbed-yet-absorbable weight."""

    def __init__(self, message: str, suggested_t_max: Optional[float] = None) -> None:
        self.suggested_t_max = suggested_t_max
        super().__init__(message)


class AssumptionViolated(ArrivalError):
    """The initial state overlaps the absorber (D psi != 0).

    The relations are only asserted when D psi = 0; the report computed without
    them is attached as ``report``.
    """

    def __init__(self, message: str, report: Any = None) -> None:
        self.report = report
        super().__init__(message)
