"""Deviations of the one-step ratio ``Z_{n+1} / Z_n``.

Given ``Z_n = j``, ``Z_{n+1} = S_j + Y`` with S_j a sum of j offspring, so the
conditional deviation probability is

    A(j, eps) = P(|S_j + Y - j| > eps j) = 1 - P(|S_j + Y - j| <= floor(eps j)).

The laws of ``W_j = S_j + Y`` are built by repeated convolution starting from
``W_0 = Y``.  Truncating every W_j at ``K_J = J + floor(eps J) + 1`` is exact for
the window ``[j - floor(eps j), j + floor(eps j)]``: supports are nonnegative,
so mass dropped above K_J never returns below it.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize

from ..errors import DegenerateConditioning, DomainError
from ..models import GwiModel
from ..series import Bracketed, distribution_at, log_H_comp


def deviation_threshold(eps: float, j: int) -> int:
    """``floor(eps * j)`` in exact rational arithmetic."""
    return math.floor(Fraction(eps) * j)


@functools.lru_cache(maxsize=32)
def _a_table(model: GwiModel, eps: float, J: int) -> np.ndarray:
    if not eps > 0:
        raise DomainError("eps must be positive")
    top = J + deviation_threshold(eps, J) + 1
    w = model.immigration.coefficients(top)
    out = np.empty(J + 1)
    out[0] = 0.0  # Z_n = 0 is excluded by the conditioning
    cum = np.empty(top + 2)
    for j in range(1, J + 1):
        w = model.offspring.convolve(w)
        t = deviation_threshold(eps, j)
        cum[0] = 0.0
        np.cumsum(w, out=cum[1 : top + 2])
        inside = cum[min(j + t, top) + 1] - cum[max(j - t, 0)]
        out[j] = max(0.0, 1.0 - inside)
    out.setflags(write=False)
    return out


def a_table(model: GwiModel, eps: float, J: int) -> np.ndarray:
    """``A(j, eps)`` for j = 0..J (entry 0 is unused and set to zero)."""
    if J < 1:
        raise DomainError("J must be at least 1")
    return _a_table(model, float(eps), int(J))


def a_k_eps(model: GwiModel, k: int, eps: float, K: int | None = None) -> float:
    """``P(|S_k + Y - k| > eps k)``; K is accepted for signature symmetry and ignored."""
    if k < 1:
        raise DomainError("k must be at least 1")
    return float(a_table(model, eps, k)[k])


def chernoff_a(model: GwiModel, j: int, eps: float) -> float:
    """Chernoff bound on ``A(j', eps)`` valid for every ``j' >= j``.

    For a fixed tilt t the bound ``B(e^t) [A(e^t) e^{-t(1+eps)}]^j`` decreases in j
    whenever the bracket is below one; t is optimised at j itself.
    """
    A, B = model.offspring, model.immigration
    t_max = math.log(min(A.radius, B.radius)) if math.isfinite(min(A.radius, B.radius)) else 5.0

    def upper_exp(t):
        x = math.exp(t)
        return j * (math.log(A.eval(x)) - t * (1.0 + eps)) + math.log(B.eval(x))

    up = 1.0
    if t_max > 0:
        r = optimize.minimize_scalar(upper_exp, bounds=(1e-12, t_max * (1 - 1e-9)), method="bounded")
        if math.log(A.eval(math.exp(r.x))) - r.x * (1.0 + eps) < 0:
            up = min(1.0, math.exp(r.fun))

    low = 0.0
    if eps < 1.0:

        def lower_exp(t):
            x = math.exp(-t)
            return j * (math.log(A.eval(x)) + t * (1.0 - eps))

        r = optimize.minimize_scalar(lower_exp, bounds=(1e-12, 50.0), method="bounded")
        if math.log(A.eval(math.exp(-r.x))) + r.x * (1.0 - eps) < 0:
            low = min(1.0, math.exp(r.fun))
        else:
            low = 1.0
    return min(1.0, up + low)


def ld_ratio_prob(
    model: GwiModel, n: int, eps: float, K: int | None = None, J_cut: int | None = None
) -> Bracketed:
    """``P(|Z_{n+1}/Z_n - 1| > eps | Z_n > 0)`` summed exactly up to ``Z_n = J_cut``.

    The remainder is enclosed by ``P(Z_n > J_cut | Z_n > 0)`` times a Chernoff
    bound on ``A(j, eps)`` for ``j > J_cut``.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if J_cut is None:
        J_cut = 2000
    d = distribution_at(model, n, max(J_cut, K or 0))
    a = a_table(model, eps, J_cut)
    logh0, _ = log_H_comp(model, [n], [1.0])
    cond = -math.expm1(logh0[0, 0])
    if not cond > 0:
        # a deviation-free step law gives 0 whatever the conditioning
        if not np.any(a):
            return Bracketed(0.0, 0.0, 0.0)
        raise DegenerateConditioning(f"P(Z_{n} > 0) = 0")
    value = math.fsum(a[1:] * d.point[1 : J_cut + 1]) / cond
    lower = math.fsum(a[1:] * d.coeffs[1 : J_cut + 1]) / cond
    beyond = max(0.0, 1.0 - math.fsum(d.coeffs[: J_cut + 1])) / cond
    up = lower + beyond * chernoff_a(model, J_cut + 1, eps)
    if d.upper is not None:
        up += math.fsum(a[1:] * (d.upper[1 : J_cut + 1] - d.coeffs[1 : J_cut + 1])) / cond
    return Bracketed(value, lower, max(up, value))


@dataclass(frozen=True)
class QEstimate:
    value: float
    terms: int
    last_term_ratio: float


def q_eps(model: GwiModel, eps: float, mu, J_cut: int | None = None) -> QEstimate:
    """``sum_{j=1}^{J_cut} A(j, eps) mu_j`` from supplied mu_0..mu_J estimates."""
    mu = np.asarray(mu, dtype=float)
    J = mu.size - 1 if J_cut is None else int(J_cut)
    if J < 1 or J > mu.size - 1:
        raise DomainError("J_cut must lie in 1..len(mu)-1")
    a = a_table(model, eps, J)
    terms = a[1:] * mu[1 : J + 1]
    total = math.fsum(terms)
    ratio = float(terms[-1] / total) if total > 0 else 0.0
    return QEstimate(total, J, ratio)
