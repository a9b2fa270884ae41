"""Limit objects and deviation bounds computed from exact laws and PGF orbits."""

from .bounds import (
    lower_dev_bound,
    max_dev_bound,
    prop41_envelope,
    shape_ratio,
    tilt_sequence,
    upper_bound_value,
    upper_dev_bound,
)
from .corrections import delta_fn, delta_lower_envelope, epsilon_fn, h_n_point, identity_residual
from .limits import (
    j_n_exact,
    kappa,
    kappa_estimate,
    kappa_grid,
    mu_conjugate,
    mu_estimate,
    mu_table,
    mu_tail_law,
    nu_integral,
    nu_n,
    nu_star,
    u_estimate,
    u_plateau_grid,
)
from .ratio import QEstimate, a_k_eps, a_table, chernoff_a, deviation_threshold, ld_ratio_prob, q_eps
from .results import BoundReport, Envelope, EstimateSeq, JnComponents, Plateau, TiltSequence, plateau

__all__ = [
    "BoundReport",
    "Envelope",
    "EstimateSeq",
    "JnComponents",
    "Plateau",
    "QEstimate",
    "TiltSequence",
    "a_k_eps",
    "a_table",
    "chernoff_a",
    "delta_fn",
    "delta_lower_envelope",
    "deviation_threshold",
    "epsilon_fn",
    "h_n_point",
    "identity_residual",
    "j_n_exact",
    "kappa",
    "kappa_estimate",
    "kappa_grid",
    "ld_ratio_prob",
    "lower_dev_bound",
    "max_dev_bound",
    "mu_conjugate",
    "mu_estimate",
    "mu_table",
    "mu_tail_law",
    "nu_integral",
    "nu_n",
    "nu_star",
    "plateau",
    "prop41_envelope",
    "q_eps",
    "shape_ratio",
    "tilt_sequence",
    "u_estimate",
    "u_plateau_grid",
    "upper_bound_value",
    "upper_dev_bound",
]
