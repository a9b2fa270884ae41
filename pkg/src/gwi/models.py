"""Offspring and immigration laws as probability generating functions.

Four families are provided.  Two of them (linear-fractional offspring with the
matching negative-binomial immigration) give a closed-form law for Z_n, which is
what the exact oracles in the test-suite lean on.

Every family knows how to evaluate itself in the *complement coordinate*
``u = 1 - x``.  Iterating ``u -> 1 - G(1 - u)`` instead of ``x -> G(x)`` keeps
full relative precision in ``1 - A_m(x)`` when the orbit crowds against the
fixed point at one, which is where all the interesting asymptotics live.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import ClassVar

import numpy as np
from scipy import optimize, signal, special, stats

from .errors import (
    CriticalityError,
    DomainError,
    ImmigrationMeanError,
    ImmigrationZeroMassError,
    NormalizationError,
    NumericalError,
    OffspringCurvatureError,
    OffspringZeroMassError,
)

# kernel family codes, shared with gwi._kernels
FINITE, LINFRAC, NEGBIN, POISSON = 0, 1, 2, 3

CRITICALITY_TOL = 1e-12
NORMALIZATION_TOL = 1e-12
_SERIES_CUTOFF = 0.05


def _frac(v: float) -> Fraction:
    return Fraction(v)


class PgfModel:
    """Common surface of the four PGF families.

    Subclasses are frozen dataclasses; all methods are pure.
    """

    kind: ClassVar[str]
    code: ClassVar[int]

    @property
    def radius(self) -> float:
        raise NotImplementedError

    # -- evaluation ---------------------------------------------------------
    def eval(self, x, order: int = 0):
        """Value of the ``order``-th derivative at real ``x`` with ``|x| < R``."""
        x = np.asarray(x, dtype=float)
        if order < 0:
            raise DomainError("derivative order must be nonnegative")
        if np.any(np.abs(x) >= self.radius):
            raise DomainError(f"|x| must be below the convergence radius {self.radius}")
        out = self._eval(x, order)
        return float(out) if np.ndim(out) == 0 else out

    def _eval(self, x: np.ndarray, order: int):
        raise NotImplementedError

    def factorial_moment(self, order: int) -> Fraction:
        """Exact ``G^{(order)}(1-)`` as a rational number."""
        raise NotImplementedError

    @property
    def mean(self) -> float:
        return float(self.factorial_moment(1))

    @property
    def variance(self) -> float:
        m1 = self.factorial_moment(1)
        return float(self.factorial_moment(2) + m1 - m1 * m1)

    @property
    def p0(self) -> float:
        return float(self.coefficients(0)[0])

    # -- complement coordinate ------------------------------------------------
    def complement(self, u):
        """``1 - G(1 - u)`` computed without cancellation for small ``u``."""
        raise NotImplementedError

    def log_eval_comp(self, u):
        """``log G(1 - u)``."""
        with np.errstate(divide="ignore"):
            return np.log1p(-self.complement(u))

    def excess(self, u):
        """``G(1 - u) - (1 - u)``; equals ``A(x) - x`` at ``x = 1 - u``."""
        raise NotImplementedError

    # -- coefficients -----------------------------------------------------------
    def coefficients(self, K: int) -> np.ndarray:
        """Point masses ``P(X = j)`` for ``j = 0..K``."""
        raise NotImplementedError

    def tail_mass(self, K: int) -> float:
        """Exact ``P(X > K)``."""
        raise NotImplementedError

    def convolve(self, row: np.ndarray) -> np.ndarray:
        """Law of ``W + X`` truncated at ``len(row) - 1`` given the law ``row`` of W."""
        row = np.asarray(row, dtype=float)
        return np.convolve(row, self._effective_coefficients(len(row) - 1))[: len(row)]

    def sum_law(self, j: int, K: int) -> np.ndarray | None:
        """Closed-form law of a sum of ``j`` iid draws on ``0..K``, if one exists."""
        return None

    def _effective_coefficients(self, K: int) -> np.ndarray:
        c = self.coefficients(K)
        nz = np.flatnonzero(c)
        return c[: nz[-1] + 1] if nz.size else c[:1]

    # -- inversion --------------------------------------------------------------
    def inverse_excess(self, y: float) -> float:
        """Return ``t >= 0`` with ``G(1 + t) = 1 + y``."""
        raise NotImplementedError

    def kernel_spec(self) -> tuple[int, np.ndarray, np.ndarray]:
        """(family code, parameter vector, tail vector) for the compiled kernels."""
        return self.code, np.asarray(self._kernel_params(), dtype=float), np.zeros(1)

    def _kernel_params(self):
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteSupport(PgfModel):
    probs: tuple[float, ...]

    kind: ClassVar[str] = "finite-support"
    code: ClassVar[int] = FINITE

    @property
    def radius(self) -> float:
        return math.inf

    @property
    def _tails(self) -> np.ndarray:
        # P(X > k) for k = 0..s-2, summed from the top to avoid cancellation
        p = np.asarray(self.probs, dtype=float)
        if p.size == 1:
            return np.zeros(0)
        return np.cumsum(p[::-1])[::-1][1:]

    def _eval(self, x, order):
        c = np.polynomial.polynomial.polyder(np.asarray(self.probs, dtype=float), order)
        return np.polynomial.polynomial.polyval(x, c)

    def factorial_moment(self, order):
        total = Fraction(0)
        for j, p in enumerate(self.probs):
            if j >= order:
                total += _frac(p) * math.perm(j, order)
        return total

    def complement(self, u):
        u = np.asarray(u, dtype=float)
        t = self._tails
        if t.size == 0:
            return np.zeros_like(u)
        return u * np.polynomial.polynomial.polyval(1.0 - u, t)

    def excess(self, u):
        u = np.asarray(u, dtype=float)
        t = self._tails
        m = math.fsum(t)
        t2 = np.cumsum(t[::-1])[::-1][1:] if t.size > 1 else np.zeros(0)
        s2 = np.polynomial.polynomial.polyval(1.0 - u, t2) if t2.size else np.zeros_like(u)
        return u * (1.0 - m) + u * u * s2

    def coefficients(self, K):
        out = np.zeros(K + 1)
        p = np.asarray(self.probs[: K + 1], dtype=float)
        out[: p.size] = p
        return out

    def tail_mass(self, K):
        return math.fsum(self.probs[K + 1 :])

    def convolve(self, row):
        row = np.asarray(row, dtype=float)
        return np.convolve(row, np.asarray(self.probs, dtype=float))[: len(row)]

    def inverse_excess(self, y):
        if y < 0:
            raise DomainError("tilt level must be nonnegative")
        if y == 0:
            return 0.0
        # G(1 + t) - 1 is a polynomial in t with factorial-moment coefficients
        coef = [float(self.factorial_moment(k)) / math.factorial(k) for k in range(1, len(self.probs))]
        if not any(coef):
            raise DomainError("constant generating function cannot be inverted")

        def f(t):
            return np.polynomial.polynomial.polyval(t, [0.0, *coef]) - y

        hi = 1.0
        while f(hi) < 0:
            hi *= 2.0
            if hi > 1e300:
                raise NumericalError("could not bracket the inverse")
        return optimize.brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def kernel_spec(self):
        t = self._tails
        return self.code, np.asarray(self.probs, dtype=float), np.ascontiguousarray(t if t.size else np.zeros(1))

    def describe(self):
        return {"family": self.kind, "params": list(self.probs)}


@dataclass(frozen=True)
class LinearFractional(PgfModel):
    """Critical linear-fractional law ``A(x) = 1 - (1-x)/(1 + gamma (1-x))``.

    Equivalently X = 0 with probability ``q = gamma/(1+gamma)``, otherwise a
    geometric variable on {1, 2, ...} with success probability ``1/(1+gamma)``.
    """

    gamma: float

    kind: ClassVar[str] = "linear-fractional"
    code: ClassVar[int] = LINFRAC

    @property
    def radius(self):
        return 1.0 + 1.0 / self.gamma

    def _eval(self, x, order):
        g = self.gamma
        u = 1.0 - x
        if order == 0:
            return 1.0 - u / (1.0 + g * u)
        return math.factorial(order) * g ** (order - 1) * (1.0 + g * u) ** (-order - 1)

    def factorial_moment(self, order):
        if order == 0:
            return Fraction(1)
        return math.factorial(order) * _frac(self.gamma) ** (order - 1)

    def complement(self, u):
        u = np.asarray(u, dtype=float)
        return u / (1.0 + self.gamma * u)

    def log_eval_comp(self, u):
        with np.errstate(divide="ignore"):
            return np.log1p(-self.complement(u))

    def excess(self, u):
        u = np.asarray(u, dtype=float)
        return self.gamma * u * u / (1.0 + self.gamma * u)

    def coefficients(self, K):
        q = self.gamma / (1.0 + self.gamma)
        out = np.empty(K + 1)
        out[0] = q
        if K >= 1:
            out[1:] = (1.0 - q) ** 2 * q ** np.arange(K)
        return out

    def tail_mass(self, K):
        q = self.gamma / (1.0 + self.gamma)
        return (1.0 - q) * q**K

    def convolve(self, row):
        # multiply by the rational PGF using only nonnegative operations
        row = np.asarray(row, dtype=float)
        q = self.gamma / (1.0 + self.gamma)
        geo = signal.lfilter([1.0], [1.0, -q], row)
        out = q * row
        out[1:] += (1.0 - q) ** 2 * geo[:-1]
        return out

    def inverse_excess(self, y):
        if y < 0:
            raise DomainError("tilt level must be nonnegative")
        return y / (1.0 + self.gamma * y)

    def _kernel_params(self):
        return [self.gamma]

    def describe(self):
        return {"family": self.kind, "params": [self.gamma]}


@dataclass(frozen=True)
class NegativeBinomial(PgfModel):
    """``B(x) = (1 + gamma (1-x))^(-sigma)``; mean ``sigma * gamma``."""

    sigma: float
    gamma: float

    kind: ClassVar[str] = "negative-binomial"
    code: ClassVar[int] = NEGBIN

    @property
    def radius(self):
        return 1.0 + 1.0 / self.gamma

    @property
    def success_prob(self) -> float:
        return 1.0 / (1.0 + self.gamma)

    def _eval(self, x, order):
        s, g = self.sigma, self.gamma
        u = 1.0 - x
        return special.poch(s, order) * g**order * (1.0 + g * u) ** (-s - order)

    def factorial_moment(self, order):
        s = _frac(self.sigma)
        rising = Fraction(1)
        for i in range(order):
            rising *= s + i
        return rising * _frac(self.gamma) ** order

    def complement(self, u):
        u = np.asarray(u, dtype=float)
        return -np.expm1(-self.sigma * np.log1p(self.gamma * u))

    def log_eval_comp(self, u):
        return -self.sigma * np.log1p(self.gamma * np.asarray(u, dtype=float))

    def excess(self, u):
        u = np.asarray(u, dtype=float)
        s, g = self.sigma, self.gamma
        direct = u - self.complement(u)
        t = g * u
        k = np.arange(2, 40)
        # binom(-s, k) = (-1)^k (s)_k / k!
        c = np.exp(special.gammaln(s + k) - special.gammaln(s) - special.gammaln(k + 1)) * (-1.0) ** k
        tt = np.minimum(t, _SERIES_CUTOFF)
        series = (1.0 - s * g) * u + np.sum(c * tt[..., None] ** k, axis=-1)
        return np.where(t < _SERIES_CUTOFF, series, direct)

    def coefficients(self, K):
        return stats.nbinom.pmf(np.arange(K + 1), self.sigma, self.success_prob)

    def tail_mass(self, K):
        return float(stats.nbinom.sf(K, self.sigma, self.success_prob))

    def sum_law(self, j, K):
        if j == 0:
            return np.eye(1, K + 1)[0]
        return stats.nbinom.pmf(np.arange(K + 1), j * self.sigma, self.success_prob)

    def inverse_excess(self, y):
        if y < 0:
            raise DomainError("tilt level must be nonnegative")
        return -math.expm1(-math.log1p(y) / self.sigma) / self.gamma

    def _kernel_params(self):
        return [self.sigma, self.gamma]

    def describe(self):
        return {"family": self.kind, "params": [self.sigma, self.gamma]}


@dataclass(frozen=True)
class Poisson(PgfModel):
    rate: float

    kind: ClassVar[str] = "poisson"
    code: ClassVar[int] = POISSON

    @property
    def radius(self):
        return math.inf

    def _eval(self, x, order):
        return self.rate**order * np.exp(self.rate * (x - 1.0))

    def factorial_moment(self, order):
        return _frac(self.rate) ** order

    def complement(self, u):
        return -np.expm1(-self.rate * np.asarray(u, dtype=float))

    def log_eval_comp(self, u):
        return -self.rate * np.asarray(u, dtype=float)

    def excess(self, u):
        u = np.asarray(u, dtype=float)
        m = self.rate
        t = m * u
        direct = np.expm1(-t) + u
        k = np.arange(2, 30)
        tt = np.minimum(t, _SERIES_CUTOFF)
        series = (1.0 - m) * u + np.sum((-tt[..., None]) ** k / special.factorial(k), axis=-1)
        return np.where(t < _SERIES_CUTOFF, series, direct)

    def coefficients(self, K):
        return stats.poisson.pmf(np.arange(K + 1), self.rate)

    def tail_mass(self, K):
        return float(stats.poisson.sf(K, self.rate))

    def sum_law(self, j, K):
        return stats.poisson.pmf(np.arange(K + 1), j * self.rate)

    def inverse_excess(self, y):
        if y < 0:
            raise DomainError("tilt level must be nonnegative")
        return math.log1p(y) / self.rate

    def _kernel_params(self):
        return [self.rate]

    def describe(self):
        return {"family": self.kind, "params": [self.rate]}


# -- constructors -----------------------------------------------------------------


def make_finite_support(probs) -> FiniteSupport:
    p = [float(v) for v in probs]
    if not p:
        raise DomainError("probability list is empty")
    if any(v < 0 or not math.isfinite(v) for v in p):
        raise DomainError("probabilities must be finite and nonnegative")
    if abs(math.fsum(p) - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"probabilities sum to {math.fsum(p)!r}, not 1")
    while len(p) > 1 and p[-1] == 0.0:
        p.pop()
    return FiniteSupport(tuple(p))


def make_linear_fractional(gamma: float) -> LinearFractional:
    if not (gamma > 0 and math.isfinite(gamma)):
        raise DomainError("gamma must be positive")
    return LinearFractional(float(gamma))


def make_negative_binomial_conjugate(sigma: float, gamma: float) -> NegativeBinomial:
    if not (sigma > 0 and math.isfinite(sigma)) or not (gamma > 0 and math.isfinite(gamma)):
        raise DomainError("sigma and gamma must be positive")
    return NegativeBinomial(float(sigma), float(gamma))


def make_poisson(mean: float) -> Poisson:
    if not (mean > 0 and math.isfinite(mean)):
        raise DomainError("Poisson mean must be positive")
    return Poisson(float(mean))


def make_pgf(family: str, params) -> PgfModel:
    """Build a family from its config name and positional parameters."""
    params = [float(v) for v in params]
    name = family.strip().lower()
    if name in ("finite-support", "finite"):
        return make_finite_support(params)
    if name in ("linear-fractional", "lf"):
        _arity(name, params, 1)
        return make_linear_fractional(params[0])
    if name in ("negative-binomial", "negative-binomial-conjugate", "nb"):
        _arity(name, params, 2)
        return make_negative_binomial_conjugate(params[0], params[1])
    if name == "poisson":
        _arity(name, params, 1)
        return make_poisson(params[0])
    raise DomainError(f"unknown family {family!r}")


def _arity(name, params, n):
    if len(params) != n:
        raise DomainError(f"family {name!r} takes {n} parameter(s), got {len(params)}")


def pgf_eval(model: PgfModel, x, order: int = 0):
    return model.eval(x, order)


def pgf_inverse_real(model: PgfModel, u: float) -> float:
    """Solve ``G(x) = u`` for ``x`` in ``[1, R)``."""
    if not u >= 1.0:
        raise DomainError("target value must be at least 1")
    sup = _sup_on_radius(model)
    if u >= sup:
        raise DomainError(f"target value {u} is not attained below the radius")
    return 1.0 + model.inverse_excess(u - 1.0)


def _sup_on_radius(model: PgfModel) -> float:
    if isinstance(model, FiniteSupport):
        return 1.0 if len(model.probs) == 1 else math.inf
    return math.inf


# -- the validated pair -------------------------------------------------------------


@dataclass(frozen=True)
class GwiModel:
    """Offspring law A and immigration law B with their derived parameters."""

    offspring: PgfModel
    immigration: PgfModel
    alpha: float
    beta: float
    gamma: float
    sigma: float
    rho: float
    validated: bool = True

    @classmethod
    def unchecked(cls, offspring: PgfModel, immigration: PgfModel) -> "GwiModel":
        """Build without enforcing the model assumption (plumbing tests only)."""
        return cls(offspring, immigration, *_derived(offspring, immigration), validated=False)

    @property
    def radius(self) -> float:
        return self.offspring.radius

    @property
    def lam(self) -> float:
        """``1 - rho / (6 gamma^2)``."""
        return 1.0 - self.rho / (6.0 * self.gamma**2)

    @property
    def offspring_variance(self) -> float:
        return self.offspring.variance

    @property
    def immigration_variance(self) -> float:
        return self.immigration.variance

    @property
    def is_conjugate(self) -> bool:
        """Linear-fractional offspring with the matching negative-binomial immigration."""
        return (
            isinstance(self.offspring, LinearFractional)
            and isinstance(self.immigration, NegativeBinomial)
            and self.offspring.gamma == self.immigration.gamma
        )

    def describe(self) -> dict:
        return {
            "offspring": self.offspring.describe(),
            "immigration": self.immigration.describe(),
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "sigma": self.sigma,
            "rho": self.rho,
            "R": self.radius,
        }


def _derived(offspring: PgfModel, immigration: PgfModel):
    a1 = offspring.factorial_moment(1)
    a2 = offspring.factorial_moment(2)
    a3 = offspring.factorial_moment(3)
    b1 = immigration.factorial_moment(1)
    g = a2 / 2
    sigma = float(b1 / g) if g != 0 else math.nan
    return float(a1), float(b1), float(g), sigma, float(a3)


def validate_condition_h(offspring: PgfModel, immigration: PgfModel) -> GwiModel:
    """Check the standing assumption and return the pair with derived parameters.

    The moment clauses hold by construction for the built-in families (finite
    support, or geometric/Poisson tails with every moment finite).
    """
    alpha, beta, gamma, sigma, rho = _derived(offspring, immigration)
    if abs(offspring.factorial_moment(1) - 1) > CRITICALITY_TOL:
        raise CriticalityError(f"alpha = {alpha!r}")
    a0 = offspring.p0
    if not 0.0 < a0 < 1.0:
        raise OffspringZeroMassError(f"a_0 = {a0!r}")
    b0 = immigration.p0
    if not 0.0 < b0 < 1.0:
        raise ImmigrationZeroMassError(f"b_0 = {b0!r}")
    if not (0.0 < beta < math.inf):
        raise ImmigrationMeanError(f"beta = {beta!r}")
    if not (0.0 < gamma < math.inf):
        raise OffspringCurvatureError(f"gamma = {gamma!r}")
    return GwiModel(offspring, immigration, alpha, beta, gamma, sigma, rho)


def conjugate_model(sigma: float, gamma: float) -> GwiModel:
    """Linear-fractional offspring paired with ``NB(sigma, gamma)`` immigration."""
    return validate_condition_h(
        make_linear_fractional(gamma), make_negative_binomial_conjugate(sigma, gamma)
    )
