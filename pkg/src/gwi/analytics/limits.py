"""Scaled limits of the law of Z_n: U, mu_j, nu_n, J_n and kappa.

A note on normalisation.  The plateau of ``n^sigma H_n(x)`` is whatever
constant multiple of a solution of ``B(x) U(A(x)) = U(x)`` the model produces;
for the conjugate family it is ``(gamma (1 - x))^(-sigma)``.  Every consumer
below either uses ratio forms or takes mu_j and U from the same scaling, so the
constant never leaks into a comparison.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import integrate, special

from ..errors import DomainError
from ..models import GwiModel
from ..series import Bracketed, DistVector, distribution_at, distribution_sweep, log_H_comp, weighted_sum
from .results import EstimateSeq, JnComponents

DEFAULT_U_HORIZON = 10**6
S_MAX = 1.0 - 1e-4


def _scaled_H(model: GwiModel, n_list: Sequence[int], u) -> np.ndarray:
    ns = np.asarray(sorted(n_list), dtype=np.int64)
    logh, _ = log_H_comp(model, ns, u)
    return np.exp(logh + model.sigma * np.log(ns.astype(float))[:, None])


def u_estimate(model: GwiModel, x: float, n_list: Sequence[int]) -> EstimateSeq:
    """``n^sigma H_n(x)`` along ``n_list`` plus the functional-equation check at x."""
    if not 0.0 <= x < 1.0:
        raise DomainError("x must lie in [0, 1)")
    ns = sorted(int(n) for n in n_list)
    ax = float(model.offspring.eval(x))
    vals = _scaled_H(model, ns, [1.0 - x, 1.0 - ax])
    seq_x = EstimateSeq("U", tuple(zip(ns, vals[:, 0])))
    seq_ax = EstimateSeq("U", tuple(zip(ns, vals[:, 1])))
    ux, uax = seq_x.plateau.value, seq_ax.plateau.value
    bx = float(model.immigration.eval(x))
    extras = {
        "x": x,
        "A(x)": ax,
        "U_at_A(x)": uax,
        "residual": bx * uax - ux,
        "ratio_residual": (ux / uax) / bx - 1.0,
    }
    return EstimateSeq("U", seq_x.points, extras)


def u_plateau_grid(model: GwiModel, s, n: int = DEFAULT_U_HORIZON) -> np.ndarray:
    """``n^sigma H_n(s)`` at a single large horizon, used as the U-grid for kappa."""
    s = np.asarray(s, dtype=float)
    return _scaled_H(model, [n], 1.0 - s)[0]


def _mu_K(j: int) -> int:
    return max(64, int(j))


def mu_estimate(model: GwiModel, j: int, n_list: Sequence[int], K: int | None = None) -> EstimateSeq:
    """``n^sigma P(Z_n = j)`` along ``n_list``."""
    if j < 0:
        raise DomainError("j must be nonnegative")
    ns = sorted(int(n) for n in n_list)
    K = _mu_K(j) if K is None else K
    dists = distribution_sweep(model, ns, K)
    pts = tuple((d.n, d.n**model.sigma * d.prob(j)) for d in dists)
    return EstimateSeq(f"mu_{j}", pts, {"K": K})


def mu_table(model: GwiModel, n: int, J: int) -> np.ndarray:
    """``n^sigma P(Z_n = j)`` for j = 0..J from one law."""
    d = distribution_at(model, n, max(J, 64))
    return n**model.sigma * np.asarray(d.point[: J + 1])


def mu_conjugate(sigma: float, gamma: float, J: int) -> np.ndarray:
    """Exact limit ``mu_j = binom(sigma + j - 1, j) / gamma^sigma`` of the conjugate family."""
    j = np.arange(J + 1, dtype=float)
    return np.exp(special.gammaln(sigma + j) - special.gammaln(sigma) - special.gammaln(j + 1)) * gamma**-sigma


def mu_tail_law(model: GwiModel, j) -> np.ndarray:
    """Large-j asymptote ``j^(sigma-1) / (gamma^sigma Gamma(sigma))``."""
    j = np.asarray(j, dtype=float)
    return j ** (model.sigma - 1.0) / (model.gamma**model.sigma * special.gamma(model.sigma))


def _law(model: GwiModel, n: int, K: int | None, dist: DistVector | None) -> DistVector:
    if n < 1:
        raise DomainError("n must be at least 1")
    return dist if dist is not None else distribution_at(model, n, K)


def nu_n(model: GwiModel, n: int, K: int | None = None, dist: DistVector | None = None) -> Bracketed:
    """``sum_{j>=1} P(Z_n = j) / j``."""
    d = _law(model, n, K, dist)
    j = np.arange(d.K + 1, dtype=float)
    w = np.divide(1.0, j, out=np.zeros_like(j), where=j > 0)
    return weighted_sum(d, w, 1.0)


def _p_zero(model: GwiModel, n: int) -> float:
    logh, _ = log_H_comp(model, [n], [1.0])
    return math.exp(logh[0, 0])


def nu_star(model: GwiModel, n: int, K: int | None = None, dist: DistVector | None = None) -> float:
    """``sum_{k>=1} P(Z_n = k | Z_n > 0) / k^2``."""
    d = _law(model, n, K, dist)
    j = np.arange(1, d.K + 1, dtype=float)
    return math.fsum(d.point[1:] / (j * j)) / (1.0 - _p_zero(model, n))


def j_n_exact(model: GwiModel, n: int, K: int | None = None, dist: DistVector | None = None) -> JnComponents:
    """Exact ``Var(Z_{n+1} / Z_n | Z_n > 0)`` from the law of Z_n."""
    d = _law(model, n, K, dist)
    cond = 1.0 - _p_zero(model, n)
    j = np.arange(1, d.K + 1, dtype=float)
    p = d.point[1:] / cond
    inv1 = math.fsum(p / j)
    inv2 = math.fsum(p / (j * j))
    dx = model.offspring_variance
    dy = model.immigration_variance
    first = dx * inv1
    second = dy * inv2
    mean_term = model.beta**2 * max(inv2 - inv1 * inv1, 0.0)
    return JnComponents(n, first + second + mean_term, first, second, mean_term, inv1, inv2, d.mass_defect)


def _graded_w(n_pts: int, s_max: float) -> np.ndarray:
    return np.linspace(0.0, -math.log1p(-s_max), n_pts)


def kappa_grid(n_pts: int = 401, s_max: float = S_MAX) -> np.ndarray:
    """Grid ``s = 1 - exp(-w)`` with w uniform: dense where U blows up."""
    return -np.expm1(-_graded_w(n_pts, s_max))


def kappa(model: GwiModel, mu: Sequence[float], u_grid: tuple[np.ndarray, np.ndarray]) -> float:
    """``2 gamma int_0^1 (U(s) - U(0))/s ds + D(Y) sum_k mu_k / k^2``.

    ``mu`` holds estimates of mu_0..mu_J.  ``u_grid`` is ``(s, U(s))`` on a
    grid from :func:`kappa_grid`, starting at s = 0.  The integrand at zero is
    ``U'(0) = mu_1``; beyond the last node ``U ~ c (1 - s)^(-sigma)`` is
    integrated in closed form with c fitted at that node.  The series is
    continued past J with the large-j law of mu_j.
    """
    sig = model.sigma
    if sig >= 1.0:
        raise DomainError("kappa is defined for sigma < 1")
    mu = np.asarray(mu, dtype=float)
    if mu.size < 2:
        raise DomainError("need mu_0 and mu_1 at least")
    s, U = (np.asarray(a, dtype=float) for a in u_grid)
    if s[0] != 0.0:
        raise DomainError("the U-grid must start at s = 0")
    U0 = U[0]
    f = np.empty_like(s)
    f[0] = mu[1]
    f[1:] = (U[1:] - U0) / s[1:]
    w = -np.log1p(-s)
    body = integrate.simpson(f * (1.0 - s), x=w)
    delta = 1.0 - s[-1]
    c = U[-1] * delta**sig
    tail = c * delta ** (1.0 - sig) / (1.0 - sig) - U0 * -math.log1p(-delta)
    k = np.arange(1, mu.size, dtype=float)
    J = mu.size - 1
    series = math.fsum(mu[1:] / (k * k))
    # continue with mu_k ~ k^(sigma-1) / (gamma^sigma Gamma(sigma)) via an Euler-Maclaurin tail
    lead = 1.0 / (model.gamma**sig * special.gamma(sig))
    series += lead * ((J + 0.5) ** (sig - 2.0) / (2.0 - sig))
    return 2.0 * model.gamma * (body + tail) + model.immigration_variance * series


def kappa_estimate(
    model: GwiModel,
    n_u: int = DEFAULT_U_HORIZON,
    n_mu: int = 20000,
    J: int = 500,
    n_pts: int = 401,
) -> float:
    """kappa with U taken at horizon ``n_u`` and mu_j at horizon ``n_mu``."""
    s = kappa_grid(n_pts)
    return kappa(model, mu_table(model, n_mu, J), (s, u_plateau_grid(model, s, n_u)))


def nu_integral(model: GwiModel, n: int, order: int = 1, n_pts: int = 2001) -> float:
    """``E[Z_n^(-order); Z_n > 0]`` from H_n on the real line (independent of the series).

    Uses ``sum_j p_j / j = int_0^1 (H(t) - H(0)) / t dt`` and
    ``sum_j p_j / j^2 = int_0^1 (H(t) - H(0)) (-log t) / t dt``, evaluated in
    ``t = exp(-v)`` on a geometric v-grid.
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    v = np.geomspace(1e-9, 60.0, n_pts)
    u = -np.expm1(-v)
    logh, _ = log_H_comp(model, [n], np.concatenate([[1.0], u]))
    h0 = math.exp(logh[0, 0])
    g = np.exp(logh[0, 1:]) - h0
    # dt / t = dv; the -log t factor is v itself
    integrand = g if order == 1 else g * v
    body = integrate.simpson(integrand * v, x=np.log(v))
    # below v_min, H(t) - H(0) ~ 1 - H(0): contributes (1-H0) * v_min^order / order
    return float(body + (1.0 - h0) * v[0] ** order / order)
