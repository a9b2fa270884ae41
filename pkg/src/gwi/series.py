"""Law of Z_n by generating-function recursion, and pointwise PGF orbits.

Two routes compute the truncated law of Z_n:

* ``"dp"`` propagates generation by generation.  The row ``T[j] = P(S_j = .)``
  of the offspring power matrix (S_j a sum of j offspring) is built once per
  (offspring, K) and reused, so a step is one matrix-vector product followed by
  a convolution with the immigration law.  Every coefficient is a sum of
  nonnegative terms, so the output is a true lower bound and the lost mass is
  exactly ``1 - sum(p)``.
* ``"spectral"`` evaluates ``H_n`` on a circle of radius ``r < 1`` with the
  compiled orbit kernel and inverts with one real FFT.  Choosing
  ``r = tol**(1/L)`` caps aliasing at ``tol``; the circle lies inside the unit
  disc so no value exceeds one in modulus.  This is what makes n in the
  thousands with K in the tens of thousands affordable.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels, reports
from .errors import DefectWarning, DomainError
from .models import POISSON, GwiModel, PgfModel

EPS = np.finfo(float).eps
SPECTRAL_TOL = 1e-15
SPECTRAL_OVERSAMPLE = 8
# grid-value rounding grows at most ~1.6 n eps in calibration runs; 4 n eps is the allowance
ROUNDING_PER_STEP = 4.0
# work (n * K^2) above which "auto" prefers the spectral route
DP_WORK_LIMIT = 2e9


class Bracketed(NamedTuple):
    """A value together with a certified enclosure ``lower <= true <= upper``."""

    value: float
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class DistVector:
    """Truncated law of Z_n.

    ``coeffs[j]`` is a lower bound on ``P(Z_n = j)`` and ``mass_defect`` bounds
    everything the truncation lost, so ``sum(coeffs) + mass_defect >= 1``.
    ``estimate`` carries the best point values; it equals ``coeffs`` on the DP
    route and differs by the rounding allowance on the spectral route.
    """

    n: int
    coeffs: np.ndarray
    mass_defect: float
    K: int
    route: str = "dp"
    estimate: np.ndarray | None = field(default=None, repr=False)
    upper: np.ndarray | None = field(default=None, repr=False)
    warning: str | None = None

    def __post_init__(self):
        for name in ("coeffs", "estimate", "upper"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                v.setflags(write=False)
                object.__setattr__(self, name, v)

    @property
    def point(self) -> np.ndarray:
        return self.coeffs if self.estimate is None else self.estimate

    def pgf(self, x) -> np.ndarray | float:
        """``sum_j coeffs[j] x^j`` (a lower bound on H_n(x) for x in [0, 1])."""
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def prob(self, j: int) -> float:
        return float(self.point[j]) if 0 <= j < len(self.point) else 0.0

    def cdf_bracket(self, k: int) -> "Bracketed":
        """Enclosure of ``P(Z_n <= k)`` for ``k <= K``."""
        if not 0 <= k <= self.K:
            raise DomainError("k must lie in 0..K")
        lower = math.fsum(self.coeffs[: k + 1])
        value = math.fsum(self.point[: k + 1])
        if self.upper is not None:
            upper = math.fsum(self.upper[: k + 1])
        else:
            upper = lower + self.mass_defect
        return Bracketed(value, lower, min(1.0, max(upper, value)))

    def tail_bracket(self, k: int) -> "Bracketed":
        """Enclosure of ``P(Z_n >= k)`` for ``1 <= k <= K + 1``."""
        c = self.cdf_bracket(k - 1)
        return Bracketed(1.0 - c.value, max(0.0, 1.0 - c.upper), 1.0 - c.lower)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "K": self.K,
            "mass_defect": self.mass_defect,
            "route": self.route,
            "warning": self.warning,
            "coeffs": self.coeffs,
        }

    def to_csv(self, path=None) -> str:
        meta = {"n": self.n, "K": self.K, "mass_defect": self.mass_defect, "route": self.route}
        rows = ((j, p) for j, p in enumerate(self.coeffs))
        text = reports.csv_text(meta, ["j", "p_j"], rows)
        if path is not None:
            reports.write_text(path, text)
        return text

    def to_json(self, path=None) -> str:
        text = reports.json_text(self.to_dict())
        if path is not None:
            reports.write_text(path, text)
        return text


def initial_dist() -> DistVector:
    """Z_0 = 0."""
    return DistVector(0, np.ones(1), 0.0, 0)


def default_degree(model: GwiModel, n: int) -> int:
    # 8 gamma n sigma, written as 8 beta n so it stays defined when gamma = 0
    return max(256, int(math.ceil(8.0 * model.beta * n)))


# -- DP route --------------------------------------------------------------------


@functools.lru_cache(maxsize=2)
def _power_matrix(offspring: PgfModel, K: int) -> np.ndarray:
    T = np.empty((K + 1, K + 1))
    if offspring.sum_law(1, 0) is not None:
        for j in range(K + 1):
            T[j] = offspring.sum_law(j, K)
    else:
        row = np.zeros(K + 1)
        row[0] = 1.0
        for j in range(K + 1):
            T[j] = row
            row = offspring.convolve(row)
    T.setflags(write=False)
    return T


def step_distribution(dist: DistVector, model: GwiModel, K: int | None = None) -> DistVector:
    """One generation: ``H_{n+1} = (H_n o A) * B`` truncated at degree K."""
    K = dist.K if K is None else int(K)
    if K < 0:
        raise DomainError("truncation degree must be nonnegative")
    p = np.zeros(K + 1)
    m = min(K + 1, len(dist.coeffs))
    p[:m] = dist.coeffs[:m]
    q = p @ _power_matrix(model.offspring, K)
    q = model.immigration.convolve(q)
    np.maximum(q, 0.0, out=q)
    return _finish_dp(q, dist.n + 1, K, dist.mass_defect)


def _finish_dp(q: np.ndarray, n: int, K: int, prev_defect: float) -> DistVector:
    s = math.fsum(q)
    if s > 1.0:
        q = q / s
        s = 1.0
    return DistVector(n, q, max(prev_defect, 1.0 - s), K, "dp")


def _dp_sweep(model: GwiModel, snaps: Sequence[int], K: int) -> list[DistVector]:
    T = _power_matrix(model.offspring, K)
    imm = model.immigration
    p = np.zeros(K + 1)
    p[0] = 1.0
    defect = 0.0
    out = []
    it = iter(snaps)
    target = next(it, None)
    n = 0
    while target is not None:
        if n == target:
            out.append(DistVector(n, p.copy(), defect, K, "dp"))
            target = next(it, None)
            continue
        q = imm.convolve(p @ T)
        np.maximum(q, 0.0, out=q)
        d = _finish_dp(q, n + 1, K, defect)
        p, defect = np.array(d.coeffs), d.mass_defect
        n += 1
    return out


# -- spectral route ----------------------------------------------------------------


def _fft_size(K: int) -> int:
    return 1 << max(4, math.ceil(math.log2(SPECTRAL_OVERSAMPLE * (K + 1))))


def _spectral_sweep(model: GwiModel, snaps: Sequence[int], K: int) -> list[DistVector]:
    L = _fft_size(K)
    r = SPECTRAL_TOL ** (1.0 / L)
    z = r * np.exp(-2j * np.pi * np.arange(L // 2 + 1) / L)
    ka, pa, _ = model.offspring.kernel_spec()
    kb, pb, _ = model.immigration.kernel_spec()
    vals = _kernels.spectral_values(ka, pa, kb, pb, z, np.asarray(snaps, dtype=np.int64))
    scale = r ** -np.arange(K + 1, dtype=float)
    out = []
    for row, n in zip(vals, snaps):
        c = np.fft.irfft(row, L)[: K + 1] * scale
        slack = SPECTRAL_TOL + (ROUNDING_PER_STEP * n + 2.0 * math.log2(L)) * EPS * scale
        lb = np.maximum(c - slack, 0.0)
        est = np.maximum(c, 0.0)
        # aliasing only adds mass, so the rounding slack alone bounds from above
        ub = c + (slack - SPECTRAL_TOL)
        defect = max(0.0, 1.0 - math.fsum(lb))
        out.append(DistVector(int(n), lb, defect, K, "spectral", estimate=est, upper=ub))
    return out


# -- public entry points -------------------------------------------------------------


def _pick_route(method: str, model: GwiModel, n: int, K: int) -> str:
    if method == "auto":
        # a short truncation starves the DP of parents above K; the spectral
        # route has no such leak, and it is also cheaper for long horizons
        if K < default_degree(model, n) or n * (K + 1) ** 2 > DP_WORK_LIMIT:
            return "spectral"
        return "dp"
    if method not in ("dp", "spectral"):
        raise DomainError(f"unknown method {method!r}")
    return method


def _check_budget(d: DistVector, budget: float | None) -> DistVector:
    if budget is None or d.mass_defect <= budget:
        return d
    msg = f"mass defect {d.mass_defect:.3g} exceeds budget {budget:.3g} at n={d.n}, K={d.K}"
    warnings.warn(msg, DefectWarning, stacklevel=3)
    return replace(d, warning=msg)


def distribution_sweep(
    model: GwiModel,
    n_list: Iterable[int],
    K: int | None = None,
    method: str = "auto",
    budget: float | None = None,
) -> list[DistVector]:
    """Laws of Z_n for every n in ``n_list`` from a single pass (output sorted by n)."""
    snaps = sorted({int(n) for n in n_list})
    if not snaps:
        return []
    if snaps[0] < 0:
        raise DomainError("generation must be nonnegative")
    K = default_degree(model, snaps[-1]) if K is None else int(K)
    if K < 0:
        raise DomainError("truncation degree must be nonnegative")
    route = _pick_route(method, model, snaps[-1], K)
    return [_check_budget(d, budget) for d in _cached_sweep(model, tuple(snaps), K, route)]


@functools.lru_cache(maxsize=16)
def _cached_sweep(model: GwiModel, snaps: tuple[int, ...], K: int, route: str) -> tuple[DistVector, ...]:
    sweep = _dp_sweep if route == "dp" else _spectral_sweep
    return tuple(sweep(model, snaps, K))


def distribution_at(
    model: GwiModel,
    n: int,
    K: int | None = None,
    method: str = "auto",
    budget: float | None = None,
) -> DistVector:
    """Law of Z_n truncated at degree K (default ``max(256, 8 gamma n sigma)``)."""
    if n == 0:
        return initial_dist()
    return distribution_sweep(model, [n], K, method, budget)[0]


# -- pointwise orbits ----------------------------------------------------------------

_NULL_IMMIGRATION = (POISSON, np.zeros(1), np.zeros(1))


def complement_orbit(offspring: PgfModel, u0, snaps: Sequence[int]) -> np.ndarray:
    """``1 - A_m(1 - u0)`` for each m in ``snaps`` (rows) and each u0 (columns)."""
    ka, pa, ta = offspring.kernel_spec()
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    _, u = _kernels.real_log_orbit(ka, pa, ta, *_NULL_IMMIGRATION, u0, np.asarray(snaps, dtype=np.int64))
    return u


def iterate_pgf_point(offspring: PgfModel, x: float, m: int) -> float:
    """``A_m(x)``, the m-fold iterate, for x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise DomainError("x must lie in [0, 1]")
    if m < 0:
        raise DomainError("iteration count must be nonnegative")
    return 1.0 - float(complement_orbit(offspring, [1.0 - x], [m])[0, 0])


def log_H_points(model: GwiModel, n_list: Sequence[int], x) -> tuple[np.ndarray, np.ndarray]:
    """``log H_n(x)`` and ``1 - A_n(x)`` for every n in sorted ``n_list`` and every x.

    The product of immigration factors is accumulated as a compensated sum of
    logs, so nothing underflows however small H_n gets.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x < 0.0) | (x > 1.0)):
        raise DomainError("x must lie in [0, 1]")
    return log_H_comp(model, n_list, 1.0 - x)


def log_H_comp(model: GwiModel, n_list: Sequence[int], u) -> tuple[np.ndarray, np.ndarray]:
    """As :func:`log_H_points` but parametrised by ``u = 1 - x`` (exact near x = 1)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any((u < 0.0) | (u > 1.0)):
        raise DomainError("u must lie in [0, 1]")
    snaps = np.asarray(n_list, dtype=np.int64)
    if snaps.size and (np.any(np.diff(snaps) < 0) or snaps[0] < 0):
        raise DomainError("n_list must be sorted and nonnegative")
    ka, pa, ta = model.offspring.kernel_spec()
    kb, pb, tb = model.immigration.kernel_spec()
    return _kernels.real_log_orbit(ka, pa, ta, kb, pb, tb, u, snaps)


def pgf_H_point(model: GwiModel, n: int, x: float) -> float:
    """``H_n(x) = prod_{m<n} B(A_m(x))``."""
    if n < 0:
        raise DomainError("generation must be nonnegative")
    logh, _ = log_H_points(model, [n], [x])
    return math.exp(logh[0, 0])


# -- moments of the truncated law ---------------------------------------------------


def weighted_sum(dist: DistVector, weights: np.ndarray, wmax: float) -> Bracketed:
    """``E w(Z_n)`` for weights ``w[j]`` on 0..K, all lying in ``[0, wmax]`` beyond.

    Missing mass may sit at any index, so the enclosure charges it at ``wmax``.
    """
    lower = math.fsum(dist.coeffs * weights)
    value = math.fsum(dist.point * weights)
    upper = max(value, lower + dist.mass_defect * wmax)
    return Bracketed(value, lower, upper)


def inverse_moment(model: GwiModel, n: int, r: float, K: int | None = None, dist: DistVector | None = None) -> Bracketed:
    """``E (Z_n + 1)^(-r)`` with a certified enclosure."""
    if not r > 0:
        raise DomainError("r must be positive")
    if dist is None:
        dist = distribution_at(model, n, K)
    j = np.arange(dist.K + 1, dtype=float)
    w = np.exp(-r * np.log1p(j))
    return weighted_sum(dist, w, 1.0)
