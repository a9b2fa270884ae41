"""Monte Carlo for the process itself.

Replications are advanced together, one generation at a time.  The offspring
total of a population of size k is drawn from the exact law of a k-fold sum:

* linear-fractional: ``N ~ Bin(k, 1/(1+gamma))`` individuals are nonzero, each
  geometric on {1, 2, ...}, so the total is ``N + Poisson(Gamma(N, gamma))``;
* negative-binomial: ``Poisson(Gamma(k sigma, gamma))``;
* Poisson: ``Poisson(k mean)``;
* finite support: multinomial counts over the support.

No normal approximation is used anywhere.

Reproducibility: replications are cut into fixed blocks of ``BLOCK`` and
block b draws from ``Philox`` keyed by ``SeedSequence(seed, spawn_key=(b,))``.
Per-block statistics are merged in block order, so the worker count never
changes a single bit of the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .errors import DegenerateConditioning, DomainError
from .models import FiniteSupport, GwiModel, LinearFractional, NegativeBinomial, PgfModel, Poisson

BLOCK = 1 << 16
CI_LEVEL = 0.99
Z99 = 2.5758293035489004
OVERFLOW_LIMIT = 1 << 62


class AliasTable:
    """Walker/Vose alias table: O(1) draws from a finite law."""

    def __init__(self, probs: Sequence[float]):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0):
            raise DomainError("need a nonempty vector of nonnegative weights")
        s = p.sum()
        if s <= 0:
            raise DomainError("weights sum to zero")
        m = p.size
        scaled = p * (m / s)
        prob = np.zeros(m)
        alias = np.zeros(m, dtype=np.int64)
        small = [i for i in range(m) if scaled[i] < 1.0]
        large = [i for i in range(m) if scaled[i] >= 1.0]
        while small and large:
            lo, hi = small.pop(), large.pop()
            prob[lo] = scaled[lo]
            alias[lo] = hi
            scaled[hi] -= 1.0 - scaled[lo]
            (small if scaled[hi] < 1.0 else large).append(hi)
        for i in large + small:
            prob[i] = 1.0
            alias[i] = i
        self.prob = prob
        self.alias = alias

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        col = rng.integers(0, self.prob.size, size=size)
        keep = rng.random(size) < self.prob[col]
        return np.where(keep, col, self.alias[col])


@dataclass(frozen=True)
class Sampler:
    """Exact draws from one PGF family: single variates and k-fold sums."""

    model: PgfModel
    draw: Callable[[np.random.Generator, int], np.ndarray]
    sum_draw: Callable[[np.random.Generator, np.ndarray], np.ndarray]


def _gamma_poisson(rng, shape, scale):
    # Poisson(Gamma(shape, scale)); shape 0 gives 0
    lam = rng.gamma(shape, scale)
    return rng.poisson(lam)


def build_sampler(model: PgfModel) -> Sampler:
    if isinstance(model, LinearFractional):
        g = model.gamma
        keep = 1.0 / (1.0 + g)

        def sum_draw(rng, k):
            nz = rng.binomial(k, keep)
            return nz + _gamma_poisson(rng, nz.astype(float), g)

        return Sampler(model, lambda rng, size: sum_draw(rng, np.ones(size, dtype=np.int64)), sum_draw)
    if isinstance(model, NegativeBinomial):
        s, g = model.sigma, model.gamma

        def sum_draw(rng, k):
            return _gamma_poisson(rng, s * np.asarray(k, dtype=float), g)

        return Sampler(model, lambda rng, size: _gamma_poisson(rng, np.full(size, s), g), sum_draw)
    if isinstance(model, Poisson):
        mu = model.rate

        def sum_draw(rng, k):
            return rng.poisson(mu * np.asarray(k, dtype=float))

        return Sampler(model, lambda rng, size: rng.poisson(mu, size), sum_draw)
    if isinstance(model, FiniteSupport):
        probs = np.asarray(model.probs, dtype=float)
        support = np.arange(probs.size, dtype=np.int64)
        table = AliasTable(probs)
        pv = probs / probs.sum()

        def sum_draw(rng, k):
            if probs.size == 1:
                return np.zeros(np.shape(k), dtype=np.int64)
            return rng.multinomial(np.asarray(k, dtype=np.int64), pv) @ support

        return Sampler(model, lambda rng, size: table.sample(rng, size), sum_draw)
    raise DomainError(f"no sampler for {type(model).__name__}")


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based substream of one replication block."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


@dataclass(frozen=True)
class Trajectories:
    """Per-replication ``Z_n``, ``M_n = max_{1<=k<=n} Z_k`` and ``Z_{n+1}``."""

    z_n: np.ndarray
    m_n: np.ndarray
    z_next: np.ndarray
    overflow: np.ndarray


def simulate_batch(model: GwiModel, n: int, size: int, rng: np.random.Generator) -> Trajectories:
    """``size`` independent trajectories from ``Z_0 = 0``, run to generation n + 1."""
    if n < 1:
        raise DomainError("n must be at least 1")
    off = build_sampler(model.offspring)
    imm = build_sampler(model.immigration)
    z = np.zeros(size, dtype=np.int64)
    m = np.zeros(size, dtype=np.int64)
    over = np.zeros(size, dtype=bool)
    z_n = z
    for gen in range(1, n + 2):
        z = off.sum_draw(rng, z) + imm.draw(rng, size)
        bad = z >= OVERFLOW_LIMIT
        if bad.any():
            over |= bad
            z[bad] = 0
        if gen <= n:
            np.maximum(m, z, out=m)
        if gen == n:
            z_n = z.copy()
    return Trajectories(z_n, m, z, over)


def sample_generation_n(model: GwiModel, n: int, rng: np.random.Generator) -> tuple[int, int, int]:
    """One trajectory: ``(Z_n, M_n, Z_{n+1})``."""
    t = simulate_batch(model, n, 1, rng)
    if t.overflow[0]:
        raise OverflowError("population exceeded the integer range")
    return int(t.z_n[0]), int(t.m_n[0]), int(t.z_next[0])


# -- block reductions ---------------------------------------------------------------


def _base_counts(t: Trajectories) -> dict:
    ok = ~t.overflow
    return {
        "positive": int(np.count_nonzero(ok & (t.z_n > 0))),
        "zero": int(np.count_nonzero(ok & (t.z_n == 0))),
        "overflow": int(np.count_nonzero(t.overflow)),
    }


def _reduce_tail(t: Trajectories, ks, use_max: bool) -> dict:
    src = t.m_n if use_max else t.z_n
    ok = ~t.overflow
    out = _base_counts(t)
    out["hits"] = [int(np.count_nonzero(ok & (src >= k))) for k in ks]
    return out


def exact_floor_mul(eps: float, z: np.ndarray) -> np.ndarray:
    """``floor(eps * z)`` elementwise, exact even when the float product lands on an integer."""
    prod = eps * z.astype(float)
    t = np.floor(prod).astype(np.int64)
    near = np.abs(prod - np.rint(prod)) <= 1e-9 * np.maximum(1.0, prod)
    if near.any():
        fe = Fraction(eps)
        idx = np.flatnonzero(near)
        t[idx] = [math.floor(fe * int(v)) for v in z[idx]]
    return t


def _reduce_ratio(t: Trajectories, eps: float) -> dict:
    ok = ~t.overflow & (t.z_n > 0)
    zn, zn1 = t.z_n[ok], t.z_next[ok]
    out = _base_counts(t)
    out["hits"] = [int(np.count_nonzero(np.abs(zn1 - zn) > exact_floor_mul(eps, zn)))]
    return out


def _reduce_moments(t: Trajectories) -> dict:
    ok = ~t.overflow & (t.z_n > 0)
    d = t.z_next[ok] / t.z_n[ok] - 1.0
    out = _base_counts(t)
    out["power_sums"] = [math.fsum(d**p) for p in (1, 2, 3, 4)]
    return out


_REDUCERS = {"tail": _reduce_tail, "ratio": _reduce_ratio, "moments": _reduce_moments}


def _block_task(args):
    model, n, seed, block, size, kind, params = args
    t = simulate_batch(model, n, size, block_rng(seed, block))
    return _REDUCERS[kind](t, *params)


def _run_blocks(model: GwiModel, n: int, reps: int, seed: int, kind: str, params: tuple, workers: int) -> list[dict]:
    if reps < 1:
        raise DomainError("reps must be at least 1")
    if seed is None:
        raise DomainError("a seed is required")
    seed = int(seed)
    nblocks = -(-reps // BLOCK)
    tasks = [(model, n, seed, b, min(BLOCK, reps - b * BLOCK), kind, params) for b in range(nblocks)]
    if workers > 1 and nblocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_block_task, tasks))
    return [_block_task(t) for t in tasks]


def _merge_counts(parts: list[dict]) -> tuple[int, int, int]:
    return (
        sum(p["positive"] for p in parts),
        sum(p["zero"] for p in parts),
        sum(p["overflow"] for p in parts),
    )


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate with a 99% interval.

    Intervals are Wilson for probabilities and normal-approximation for
    variances.  ``conditioning_count + zero_count + overflow_count == reps``
    where the first counts replications with ``Z_n > 0``.
    """

    value: float
    reps: int
    ci_low: float
    ci_high: float
    seed: int
    conditioning_count: int
    zero_count: int = 0
    overflow_count: int = 0
    hits: int | None = None
    label: str = ""

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "value": self.value,
            "reps": self.reps,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "seed": self.seed,
            "conditioning_count": self.conditioning_count,
            "zero_count": self.zero_count,
            "overflow_count": self.overflow_count,
            "hits": self.hits,
            "source": "monte-carlo",
        }


def wilson(hits: int, trials: int) -> tuple[float, float]:
    lo, hi = proportion_confint(hits, trials, alpha=1.0 - CI_LEVEL, method="wilson")
    return float(max(0.0, lo)), float(min(1.0, hi))


def _proportion(hits: int, trials: int, reps: int, seed: int, counts, label: str) -> McEstimate:
    pos, zero, over = counts
    value = hits / trials
    lo, hi = wilson(hits, trials)
    return McEstimate(value, reps, min(lo, value), max(hi, value), seed, pos, zero, over, hits, label)


def _tail(model, n, k, reps, seed, workers, use_max, label):
    ks = [int(v) for v in np.atleast_1d(k)]
    parts = _run_blocks(model, n, reps, seed, "tail", (ks, use_max), workers)
    counts = _merge_counts(parts)
    trials = reps - counts[2]
    if trials == 0:
        raise DegenerateConditioning("every replication overflowed")
    out = [
        _proportion(sum(p["hits"][i] for p in parts), trials, reps, seed, counts, f"{label}>={kv}")
        for i, kv in enumerate(ks)
    ]
    return out if np.ndim(k) else out[0]


def mc_tail(model: GwiModel, n: int, k, reps: int, seed: int, workers: int = 1):
    """``P(Z_n >= k)``; a sequence of k gives a list sharing the same draws."""
    return _tail(model, n, k, reps, seed, workers, False, "Z_n")


def mc_max_tail(model: GwiModel, n: int, k, reps: int, seed: int, workers: int = 1):
    """``P(max_{1<=j<=n} Z_j >= k)`` with the same streams as :func:`mc_tail`."""
    return _tail(model, n, k, reps, seed, workers, True, "M_n")


def mc_ratio_deviation(model: GwiModel, n: int, eps: float, reps: int, seed: int, workers: int = 1) -> McEstimate:
    """``P(|Z_{n+1}/Z_n - 1| > eps | Z_n > 0)``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    parts = _run_blocks(model, n, reps, seed, "ratio", (float(eps),), workers)
    counts = _merge_counts(parts)
    if counts[0] == 0:
        raise DegenerateConditioning("no replication had Z_n > 0")
    hits = sum(p["hits"][0] for p in parts)
    return _proportion(hits, counts[0], reps, seed, counts, f"ratio_dev(eps={eps})")


def mc_conditional_ratio_variance(model: GwiModel, n: int, reps: int, seed: int, workers: int = 1) -> McEstimate:
    """Sample variance of ``Z_{n+1}/Z_n`` over replications with ``Z_n > 0``."""
    parts = _run_blocks(model, n, reps, seed, "moments", (), workers)
    counts = _merge_counts(parts)
    N = counts[0]
    if N < 2:
        raise DegenerateConditioning("fewer than two replications had Z_n > 0")
    s1, s2, s3, s4 = (math.fsum(p["power_sums"][i] for p in parts) for i in range(4))
    m1 = s1 / N
    raw2, raw3, raw4 = s2 / N, s3 / N, s4 / N
    c2 = raw2 - m1 * m1
    c4 = raw4 - 4 * m1 * raw3 + 6 * m1 * m1 * raw2 - 3 * m1**4
    var = c2 * N / (N - 1)
    se = math.sqrt(max(c4 - c2 * c2, 0.0) / N)
    return McEstimate(var, reps, var - Z99 * se, var + Z99 * se, seed, N, counts[1], counts[2], None, "J_n")
