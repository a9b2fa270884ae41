"""Closed forms for the conjugate family (linear-fractional A, matching NB immigration).

For ``A(x) = 1 - (1-x)/(1+gamma(1-x))`` and ``B(x) = (1+gamma(1-x))^(-sigma)``,
``B(A_m(x)) = ((1+gamma m (1-x)) / (1+gamma (m+1)(1-x)))^sigma`` and the
product telescopes to ``H_n(x) = (1 + gamma n (1-x))^(-sigma)``: Z_n is
negative binomial with shape sigma and success probability ``1/(1+gamma n)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special, stats

from .errors import DomainError


def _check(sigma: float, gamma: float, n: int):
    if not (sigma > 0 and gamma > 0):
        raise DomainError("sigma and gamma must be positive")
    if n < 0:
        raise DomainError("n must be nonnegative")


def success_prob(gamma: float, n: int) -> float:
    return 1.0 / (1.0 + gamma * n)


def pmf(sigma: float, gamma: float, n: int, j) -> np.ndarray:
    """``P(Z_n = j)``."""
    _check(sigma, gamma, n)
    if n == 0:
        return (np.asarray(j) == 0).astype(float)
    return stats.nbinom.pmf(j, sigma, success_prob(gamma, n))


def sf(sigma: float, gamma: float, n: int, k) -> np.ndarray:
    """``P(Z_n >= k)``."""
    _check(sigma, gamma, n)
    return stats.nbinom.sf(np.asarray(k) - 1, sigma, success_prob(gamma, n))


def cdf(sigma: float, gamma: float, n: int, k) -> np.ndarray:
    """``P(Z_n <= k)``."""
    _check(sigma, gamma, n)
    return stats.nbinom.cdf(k, sigma, success_prob(gamma, n))


def H(sigma: float, gamma: float, n: int, x) -> np.ndarray:
    """``(1 + gamma n (1 - x))^(-sigma)``."""
    _check(sigma, gamma, n)
    return (1.0 + gamma * n * (1.0 - np.asarray(x, dtype=float))) ** -sigma


def A_iter(gamma: float, m: int, x) -> np.ndarray:
    """``A_m(x) = 1 - (1-x) / (1 + gamma m (1-x))``."""
    u = 1.0 - np.asarray(x, dtype=float)
    return 1.0 - u / (1.0 + gamma * m * u)


def mu(sigma: float, gamma: float, j) -> np.ndarray:
    """``lim n^sigma P(Z_n = j) = binom(sigma+j-1, j) gamma^(-sigma)``."""
    j = np.asarray(j, dtype=float)
    return np.exp(special.gammaln(sigma + j) - special.gammaln(sigma) - special.gammaln(j + 1)) * gamma**-sigma


def nu_sigma1(n: int) -> float:
    """``sum_{j>=1} P(Z_n = j)/j`` for sigma = gamma = 1: ``log(n+1)/(n+1)``."""
    return math.log1p(n) / (n + 1)


def inverse_moment_sigma1(n: int) -> float:
    """``E (Z_n + 1)^(-1)`` for sigma = gamma = 1: ``log(n+1) / n`` (1 at n = 0)."""
    return 1.0 if n == 0 else math.log1p(n) / n


def reference_values(sigma: float, gamma: float, n: int, jmax: int = 10) -> dict:
    """Closed-form reference table printed by ``gwi oracle``."""
    _check(sigma, gamma, n)
    p = success_prob(gamma, n)
    j = np.arange(jmax + 1)
    return {
        "sigma": sigma,
        "gamma": gamma,
        "n": n,
        "success_prob": p,
        "mean": sigma * gamma * n,
        "variance": sigma * gamma * n * (1.0 + gamma * n),
        "H_n(0)": float(H(sigma, gamma, n, 0.0)),
        "pmf": [float(v) for v in pmf(sigma, gamma, n, j)],
        "mu": [float(v) for v in mu(sigma, gamma, j)],
    }
