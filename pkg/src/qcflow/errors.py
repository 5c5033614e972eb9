"""Exception hierarchy shared by all qcflow modules."""

from __future__ import annotations


class QCFlowError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ConfigError(QCFlowError):
    exit_code = 2


class DomainError(QCFlowError, ValueError):
    """A point falls outside the region where an object can be evaluated."""


class NumericError(QCFlowError, ArithmeticError):
    """Non-finite values appeared where finite ones are required."""


class FlowEscapeError(DomainError):
    def __init__(self, seed_index: int, time: float, point=None):
        self.seed_index = int(seed_index)
        self.time = float(time)
        self.point = point
        super().__init__(f"trajectory of seed {self.seed_index} left the domain at t={self.time:.6g}")


class StiffnessError(NumericError):
    """Adaptive step size fell below the underflow threshold."""


class UnboundedGrowthError(NumericError):
    pass


class DegeneracyError(NumericError):
    """Two points that must stay apart collapsed (distance below 1e-14)."""


class OrientationError(NumericError):
    pass


class CoverageError(DomainError):
    pass


class SupportError(DomainError):
    pass


class StepSizeError(QCFlowError, ValueError):
    pass


class GridSizeError(QCFlowError, ValueError):
    pass


class InconsistencyError(QCFlowError):
    """Computed flow contradicts the a-priori radius bound."""


class CriterionFailure(QCFlowError):
    exit_code = 1
