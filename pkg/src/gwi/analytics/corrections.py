"""Departure of an offspring law from the linear-fractional evolution.

With ``u = 1 - x`` and ``c = 1 - A(x)`` one has ``1/c - 1/u = (A(x) - x) / (c u)``
and ``A(x) - x`` is available from each family without cancellation, so both
correction functions below stay accurate all the way up to ``x -> 1``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError
from ..models import GwiModel, LinearFractional
from ..series import complement_orbit


def _comp_arg(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x >= 1.0)):
        raise DomainError("x must lie in [0, 1)")
    return 1.0 - x


def _delta_u(model: GwiModel, u: np.ndarray) -> np.ndarray:
    A = model.offspring
    if isinstance(A, LinearFractional):
        return np.zeros_like(u)
    return model.gamma - A.excess(u) / (A.complement(u) * u)


def _eps_u(model: GwiModel, u: np.ndarray) -> np.ndarray:
    A = model.offspring
    if isinstance(A, LinearFractional):
        g = A.gamma
        return g * g * u / (1.0 + g * u)
    return model.gamma - A.excess(u) / (u * u)


def _scalarize(v):
    return float(v) if np.ndim(v) == 0 else v


def delta_fn(model: GwiModel, x):
    """``gamma - [1/(1 - A(x)) - 1/(1 - x)]``; identically zero for linear-fractional A."""
    return _scalarize(_delta_u(model, _comp_arg(x)))


def epsilon_fn(model: GwiModel, x):
    """``gamma - (A(x) - x) / (1 - x)^2``; nonnegative and nonincreasing in x."""
    return _scalarize(_eps_u(model, _comp_arg(x)))


def delta_lower_envelope(model: GwiModel, x):
    """``-gamma^2 (1 - x) / (1 - a_0)``, the lower companion of ``epsilon_fn``."""
    u = _comp_arg(x)
    return _scalarize(-(model.gamma**2) * u / (1.0 - model.offspring.p0))


def orbit_complements(model: GwiModel, x, n: int) -> np.ndarray:
    """``1 - A_m(x)`` for m = 0..n, one row per m."""
    u0 = np.atleast_1d(_comp_arg(x))
    return complement_orbit(model.offspring, u0, np.arange(n + 1))


def h_n_point(model: GwiModel, x, n: int):
    """``sum_{m<n} delta(A_m(x))``."""
    if n < 0:
        raise DomainError("generation must be nonnegative")
    if isinstance(model.offspring, LinearFractional):
        _comp_arg(x)
        return _scalarize(np.zeros(np.shape(x)))
    u = orbit_complements(model, x, n)[:-1]
    d = _delta_u(model, u)
    out = np.array([math.fsum(col) for col in d.T])
    return _scalarize(out[0] if np.ndim(x) == 0 else out)


def identity_residual(model: GwiModel, x, n: int):
    """``1/(1-x) + n gamma - 1/(1-A_n(x)) - h_n(x)``, which vanishes exactly."""
    u = orbit_complements(model, x, n)
    if isinstance(model.offspring, LinearFractional):
        h = np.zeros(u.shape[1])
    else:
        h = np.array([math.fsum(col) for col in _delta_u(model, u[:-1]).T])
    res = 1.0 / u[0] + n * model.gamma - 1.0 / u[-1] - h
    return _scalarize(res[0] if np.ndim(x) == 0 else res)
