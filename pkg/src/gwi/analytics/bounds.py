"""Two-sided envelope of H_n and the deviation bounds for Z_n and its running maximum."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import DomainError, NumericalError
from ..models import GwiModel
from ..series import default_degree, distribution_at, log_H_comp
from .results import BoundReport, Envelope, TiltSequence

DEFAULT_C4 = 4.0
DEFAULT_C3 = 10.0
# the upper bound's neglected (1 + O(k/n^2)) factor is only tested up to this scale
K_OVER_N2_CEILING = 0.25
TILT_TOL = 1e-12


def prop41_envelope(model: GwiModel, n: int, s_grid: Sequence[float], c4: float = DEFAULT_C4) -> Envelope:
    """``H_n(e^{-s/n}) (1 + gamma s)^sigma`` over ``0 < s <= c4 n``."""
    if n < 1:
        raise DomainError("n must be at least 1")
    s = np.asarray(s_grid, dtype=float)
    if s.size == 0 or np.any(s <= 0) or np.any(s > c4 * n):
        raise DomainError(f"s must lie in (0, {c4} n]")
    u = -np.expm1(-s / n)
    logh, _ = log_H_comp(model, [n], u)
    ratio = np.exp(logh[0] + model.sigma * np.log1p(model.gamma * s))
    return Envelope(n, s, ratio)


def lower_dev_bound(model: GwiModel, n: int, k_n: int, c3: float = DEFAULT_C3) -> BoundReport:
    """``P(Z_n <= k_n)`` against ``(1 + gamma n / k_n)^(-sigma)``.

    The constant in front is existential; ``c3`` is the envelope the report is
    judged against and ``ratio`` is the observed value of that constant.
    """
    if not 1 <= k_n < n:
        raise DomainError("need 1 <= k_n < n")
    d = distribution_at(model, n, k_n)
    p = d.cdf_bracket(k_n)
    bound = (1.0 + model.gamma * n / k_n) ** -model.sigma
    return BoundReport(n, k_n, p.value, p.lower, p.upper, "exact-series", bound, c3, {"K": d.K})


def _require_tilt_model(model: GwiModel):
    if not model.radius > 1.0:
        raise DomainError("the tilt argument needs a convergence radius above 1")
    if not math.isfinite(model.rho):
        raise DomainError("the tilt argument needs a finite third derivative at 1")


def tilt_sequence(model: GwiModel, n: int, y0: float) -> TiltSequence:
    """Solve ``A(1 + y_{m+1}) = 1 + y_m`` backwards from y_0 for m < n."""
    _require_tilt_model(model)
    if not 0.0 <= y0 < model.radius - 1.0:
        raise DomainError("y0 must lie in [0, R - 1)")
    if n < 0:
        raise DomainError("n must be nonnegative")
    y = np.empty(n + 1)
    y[0] = y0
    A = model.offspring
    for m in range(n):
        try:
            y[m + 1] = A.inverse_excess(float(y[m]))
        except (ValueError, RuntimeError) as exc:
            raise NumericalError(f"inversion failed at step {m}") from exc
    total = math.fsum(y[:-1])
    gap = total - math.log1p(model.gamma * n * y0) / model.gamma
    return TiltSequence(y, f"y0={y0!r}", gap)


def _upper_setup(model: GwiModel, n: int, k_n: int, slack: float):
    _require_tilt_model(model)
    if not n < k_n < n * n:
        raise DomainError("need n < k_n < n^2")
    if k_n / n**2 > slack:
        raise DomainError(f"k_n / n^2 = {k_n / n**2:.3g} exceeds {slack}")
    g = model.gamma
    y0 = k_n / (g * g * n * n) - 1.0 / (g * n)
    if not 0.0 < y0 < model.radius - 1.0:
        raise DomainError(f"tilt start y0 = {y0!r} outside (0, R - 1)")
    if not 1.0 + y0 < model.immigration.radius:
        raise DomainError("tilt start outside the immigration radius")
    return y0


def upper_bound_value(model: GwiModel, n: int, k_n: int, slack: float = K_OVER_N2_CEILING) -> float:
    """Right-hand side of the upper deviation bound with the ``1 + O(k/n^2)`` factor set to 1."""
    y0 = _upper_setup(model, n, k_n, slack)
    g = model.gamma
    r = k_n / (g * n)
    b1 = float(model.immigration.eval(1.0 + y0, 1))
    expo = b1 / g * math.log(r) - r + 1.0 - (model.lam / g) * (k_n / n**2) * math.log(k_n / n)
    return math.exp(expo)


def shape_ratio(model: GwiModel, n: int, k_n: int) -> float:
    """Upper bound divided by ``(k_n/(gamma n))^sigma exp(-k_n/(gamma n))``."""
    r = k_n / (model.gamma * n)
    return upper_bound_value(model, n, k_n, slack=math.inf) / (r**model.sigma * math.exp(-r))


def upper_dev_bound(model: GwiModel, n: int, k_n: int, slack: float = K_OVER_N2_CEILING) -> BoundReport:
    """``P(Z_n >= k_n)`` from the exact law against the tilt bound."""
    bound = upper_bound_value(model, n, k_n, slack)
    # headroom past k_n so the truncation defect sits far below the tail itself
    d = distribution_at(model, n, max(4 * k_n, default_degree(model, n)))
    p = d.tail_bracket(k_n)
    extras = {"k_over_n2": k_n / n**2, "K": d.K, "mass_defect": d.mass_defect}
    return BoundReport(n, k_n, p.value, p.lower, p.upper, "exact-series", bound, 1.0, extras)


def max_dev_bound(
    model: GwiModel,
    n: int,
    k_n: int,
    reps: int,
    seed: int,
    workers: int = 1,
    slack: float = K_OVER_N2_CEILING,
) -> BoundReport:
    """``P(max_{1<=k<=n} Z_k >= k_n)`` by simulation against the same right-hand side."""
    from ..simulate import mc_max_tail

    bound = upper_bound_value(model, n, k_n, slack)
    est = mc_max_tail(model, n, k_n, reps, seed, workers=workers)
    src = f"monte-carlo(CI99 [{est.ci_low:.3g}, {est.ci_high:.3g}])"
    extras = {"k_over_n2": k_n / n**2, "reps": reps, "seed": seed, "hits": est.hits}
    return BoundReport(n, k_n, est.value, est.ci_low, est.ci_high, src, bound, 1.0, extras)
