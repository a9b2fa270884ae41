"""Critical Galton-Watson processes with immigration.

Exact laws of Z_n (truncated power series with certified mass defect), limit
constants, deviation bounds and a reproducible Monte Carlo harness.
"""

from ._kernels import BACKEND
from .errors import (
    ConditionHError,
    DefectWarning,
    DegenerateConditioning,
    DomainError,
    GwiError,
    NormalizationError,
    NumericalError,
)
from .models import (
    FiniteSupport,
    GwiModel,
    LinearFractional,
    NegativeBinomial,
    PgfModel,
    Poisson,
    conjugate_model,
    make_pgf,
    pgf_eval,
    pgf_inverse_real,
    validate_condition_h,
)
from .series import (
    Bracketed,
    DistVector,
    distribution_at,
    distribution_sweep,
    inverse_moment,
    log_H_points,
    pgf_H_point,
    step_distribution,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Bracketed",
    "ConditionHError",
    "DefectWarning",
    "DegenerateConditioning",
    "DistVector",
    "DomainError",
    "FiniteSupport",
    "GwiError",
    "GwiModel",
    "LinearFractional",
    "NegativeBinomial",
    "NormalizationError",
    "NumericalError",
    "PgfModel",
    "Poisson",
    "conjugate_model",
    "distribution_at",
    "distribution_sweep",
    "inverse_moment",
    "log_H_points",
    "make_pgf",
    "pgf_H_point",
    "pgf_eval",
    "pgf_inverse_real",
    "step_distribution",
    "validate_condition_h",
]
