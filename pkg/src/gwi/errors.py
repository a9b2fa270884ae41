"""Exception and warning types raised across the package."""


class GwiError(Exception):
    """Base class for every error raised by gwi."""


class DomainError(GwiError, ValueError):
    """An argument lies outside the region where the operation is defined."""


class NormalizationError(GwiError, ValueError):
    """Probabilities do not sum to one."""


class NumericalError(GwiError, ArithmeticError):
    """A root-finder or iteration failed to converge."""


class DegenerateConditioning(GwiError):
    """Too few Monte Carlo replications satisfied the conditioning event."""


class ConditionHError(GwiError, ValueError):
    """A clause of the standing model assumption is violated.

    ``clause`` names the violated requirement in plain text.
    """

    clause = "model assumption"

    def __init__(self, detail: str):
        super().__init__(f"{self.clause} violated: {detail}")
        self.detail = detail


class CriticalityError(ConditionHError):
    clause = "offspring mean alpha = 1"


class OffspringZeroMassError(ConditionHError):
    clause = "0 < a_0 < 1"


class ImmigrationZeroMassError(ConditionHError):
    clause = "0 < b_0 < 1"


class ImmigrationMeanError(ConditionHError):
    clause = "0 < beta < inf"


class OffspringCurvatureError(ConditionHError):
    clause = "0 < gamma < inf"


class DefectWarning(UserWarning):
    """Truncation mass defect exceeded the requested budget."""
