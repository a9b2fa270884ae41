"""Result carriers for limit estimates and deviation bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True)
class Plateau:
    value: float
    spread: float
    window: tuple[int, ...]


def plateau(ns: Sequence[int], values: Sequence[float]) -> Plateau:
    """Mean and relative spread ``(max - min) / |mean|`` over the trailing half.

    With an odd number of points the middle one belongs to the trailing half.
    """
    ns = list(ns)
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("no points")
    start = v.size // 2
    tail = v[start:]
    mean = float(np.mean(tail))
    spread = float((tail.max() - tail.min()) / abs(mean)) if mean != 0 else math.inf
    return Plateau(mean, spread, tuple(ns[start:]))


@dataclass(frozen=True)
class EstimateSeq:
    """Scaled finite-n values ``(n, value)`` of a limit object."""

    label: str
    points: tuple[tuple[int, float], ...]
    extras: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = tuple((int(n), float(v)) for n, v in self.points)
        if not pts:
            raise DomainError("an estimate sequence needs at least one point")
        if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise DomainError("n must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def ns(self) -> list[int]:
        return [n for n, _ in self.points]

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points])

    @property
    def plateau(self) -> Plateau:
        return plateau(self.ns, self.values)

    def to_dict(self) -> dict:
        p = self.plateau
        return {
            "label": self.label,
            "points": [list(t) for t in self.points],
            "plateau": {"value": p.value, "spread": p.spread, "window": list(p.window)},
            **self.extras,
        }


@dataclass(frozen=True)
class BoundReport:
    """A probability (with its enclosure) set against a theoretical bound.

    ``satisfied`` compares the *upper* end of the enclosure with
    ``constant * bound_value``; ``constant`` is 1 for bounds with an explicit
    right-hand side and the allowed envelope for existential constants.
    """

    n: int
    k_n: int
    value: float
    prob_lower: float
    prob_upper: float
    source: str
    bound_value: float
    constant: float = 1.0
    extras: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def ratio(self) -> float:
        return self.value / self.bound_value if self.bound_value > 0 else math.inf

    @property
    def satisfied(self) -> bool:
        return self.prob_upper <= self.constant * self.bound_value

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k_n": self.k_n,
            "value": self.value,
            "prob_lower": self.prob_lower,
            "prob_upper": self.prob_upper,
            "source": self.source,
            "bound_value": self.bound_value,
            "constant": self.constant,
            "ratio": self.ratio,
            "satisfied": self.satisfied,
            **self.extras,
        }


@dataclass(frozen=True)
class TiltSequence:
    """``y_0 > y_1 > ... > y_n`` with ``A(1 + y_{m+1}) = 1 + y_m``."""

    y: np.ndarray
    y0_spec: str
    log_sum_gap: float

    @property
    def total(self) -> float:
        """``sum_{i<n} y_i``."""
        return math.fsum(self.y[:-1])


@dataclass(frozen=True)
class Envelope:
    n: int
    s: np.ndarray
    ratio: np.ndarray

    @property
    def lo(self) -> float:
        return float(self.ratio.min())

    @property
    def hi(self) -> float:
        return float(self.ratio.max())

    def to_dict(self) -> dict:
        return {"n": self.n, "min": self.lo, "max": self.hi, "s": self.s, "ratio": self.ratio}


@dataclass(frozen=True)
class JnComponents:
    """Conditional variance of ``Z_{n+1} / Z_n`` given ``Z_n > 0``, split by source.

    ``offspring_term + immigration_term`` is the average of the conditional
    variance given ``Z_n``; ``mean_term = beta^2 Var(1/Z_n | Z_n > 0)`` is the
    variance of the conditional mean ``1 + beta / Z_n``.  ``value`` is their sum.
    """

    n: int
    value: float
    offspring_term: float
    immigration_term: float
    mean_term: float
    nu_cond: float
    nu_star: float
    mass_defect: float

    @property
    def two_term(self) -> float:
        return self.offspring_term + self.immigration_term

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "J_n": self.value,
            "two_term": self.two_term,
            "offspring_term": self.offspring_term,
            "immigration_term": self.immigration_term,
            "mean_term": self.mean_term,
            "nu_cond": self.nu_cond,
            "nu_star": self.nu_star,
            "mass_defect": self.mass_defect,
        }
