"""Experiment configuration files.

Example::

    [offspring]
    family = linear-fractional
    params = 1.0

    [immigration]
    family = negative-binomial
    params = 1.0, 1.0

    [run]
    suite = all
    seed = 20240601
    reps = 100000
    format = csv
    out = reports

    [grid]
    n_list = 100, 200, 400
    x_grid = 0, 0.5, 0.9
    eps_list = 0.25, 0.5
    k_rule = 1 * n^1/2

    [suite:upper]
    n_list = 50, 100
    k_rule = 10 * n^1

Keys in ``[suite:<name>]`` override ``[grid]`` and ``[run]`` for that suite only.
"""

from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .errors import GwiError
from .models import GwiModel, make_pgf, validate_condition_h

SUITES = ("identity", "dist", "prop41", "ld", "variance", "lower", "upper", "max", "nu")
MONTE_CARLO_SUITES = frozenset({"upper", "max"})
FORMATS = ("csv", "json", "both")
SEED_ENV = "GWI_SEED"


class ConfigError(GwiError):
    """Unreadable or inconsistent configuration; the message names the field."""


@dataclass(frozen=True)
class KRule:
    """``k_n = ceil(c * n^p)`` with rational c and p."""

    c: Fraction
    p: Fraction
    text: str

    def __call__(self, n: int) -> int:
        v = float(self.c) * float(n) ** float(self.p)
        r = round(v)
        if abs(v - r) <= 1e-9 * max(1.0, v):
            return int(r)
        return int(math.ceil(v))


_KRULE = re.compile(r"^\s*(?:(?P<c>[0-9.]+(?:/[0-9.]+)?)\s*\*\s*)?n\s*(?:\^\s*(?P<p>[0-9.]+(?:/[0-9.]+)?))?\s*$")


def parse_k_rule(text: str) -> KRule:
    m = _KRULE.match(text)
    if not m:
        raise ValueError(f"expected 'c * n^p', got {text!r}")
    c = Fraction(m.group("c")) if m.group("c") else Fraction(1)
    p = Fraction(m.group("p")) if m.group("p") else Fraction(1)
    if c <= 0:
        raise ValueError("c must be positive")
    return KRule(c, p, text.strip())


def _floats(text: str) -> list[float]:
    return [float(t) for t in re.split(r"[,\s]+", text.strip()) if t]


def _ints(text: str) -> list[int]:
    out = []
    for t in re.split(r"[,\s]+", text.strip()):
        if not t:
            continue
        v = float(t)
        if v != int(v):
            raise ValueError(f"{t!r} is not an integer")
        out.append(int(v))
    return out


@dataclass(frozen=True)
class SuiteConfig:
    """Resolved settings of one suite (global values with overrides applied)."""

    name: str
    values: Mapping[str, str]
    section: str

    def _get(self, key: str, parse, default):
        raw = self.values.get(key)
        if raw is None or raw.strip() == "":
            return default
        try:
            return parse(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"[{self.section}] {key}: {exc}") from None

    def ints(self, key, default=None):
        v = self._get(key, _ints, default)
        if v is not None and not v:
            raise ConfigError(f"[{self.section}] {key}: empty list")
        return v

    def floats(self, key, default=None):
        v = self._get(key, _floats, default)
        if v is not None and not v:
            raise ConfigError(f"[{self.section}] {key}: empty list")
        return v

    def int(self, key, default=None):
        return self._get(key, lambda s: _ints(s)[0], default)

    def float(self, key, default=None):
        return self._get(key, float, default)

    def k_rule(self, key="k_rule", default=None):
        return self._get(key, parse_k_rule, default)


@dataclass(frozen=True)
class ExperimentConfig:
    model: GwiModel
    suites: tuple[str, ...]
    seed: int | None
    reps: int
    K: int | None
    fmt: str
    out: Path
    source: str
    model_spec: dict = field(default_factory=dict)
    _raw: Any = field(default=None, repr=False, compare=False)

    def suite(self, name: str) -> SuiteConfig:
        cp: configparser.ConfigParser = self._raw
        values: dict[str, str] = {}
        for sec in ("run", "grid"):
            if cp.has_section(sec):
                values.update(cp[sec])
        sec = f"suite:{name}"
        if cp.has_section(sec):
            values.update(cp[sec])
        return SuiteConfig(name, values, sec if cp.has_section(sec) else "grid")

    def needs_seed(self) -> bool:
        for s in self.suites:
            if s in MONTE_CARLO_SUITES:
                return True
            if s in ("ld", "variance") and (self.suite(s).int("mc_reps", 0) or 0) > 0:
                return True
        return False


def _model_from(cp: configparser.ConfigParser) -> tuple[GwiModel, dict]:
    spec = {}
    pgfs = []
    for role in ("offspring", "immigration"):
        if not cp.has_section(role):
            raise ConfigError(f"missing section [{role}]")
        sec = cp[role]
        family = sec.get("family")
        if not family:
            raise ConfigError(f"[{role}] family: missing")
        try:
            params = _floats(sec.get("params", ""))
        except ValueError as exc:
            raise ConfigError(f"[{role}] params: {exc}") from None
        try:
            pgfs.append(make_pgf(family, params))
        except GwiError as exc:
            raise ConfigError(f"[{role}] {exc}") from None
        spec[role] = {"family": family, "params": params}
    try:
        return validate_condition_h(*pgfs), spec
    except GwiError as exc:
        raise ConfigError(f"model assumption violated: {exc}") from None


def load_config(path: os.PathLike | str, suite: str | None = None, out: os.PathLike | str | None = None) -> ExperimentConfig:
    """Parse and validate a config file; ``suite``/``out`` override the file."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    model, spec = _model_from(cp)
    run = cp["run"] if cp.has_section("run") else {}
    name = suite or run.get("suite", "all")
    if name != "all" and name not in SUITES:
        raise ConfigError(f"[run] suite: unknown suite {name!r}")
    suites = SUITES if name == "all" else (name,)

    def _int(key, default):
        raw = run.get(key)
        if raw is None or not raw.strip():
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[run] {key}: {raw!r} is not an integer") from None

    seed = _int("seed", None)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}: {env!r} is not an integer") from None
    reps = _int("reps", 100000)
    if reps < 1:
        raise ConfigError("[run] reps: must be at least 1")
    K = _int("K", None)
    fmt = run.get("format", "csv").strip()
    if fmt not in FORMATS:
        raise ConfigError(f"[run] format: expected one of {FORMATS}")
    out_dir = Path(out) if out is not None else Path(run.get("out", "reports"))
    cfg = ExperimentConfig(model, suites, seed, reps, K, fmt, out_dir, str(path), spec, cp)
    for s in suites:
        sc = cfg.suite(s)
        for key in ("n_list",):
            sc.ints(key)
        for key in ("x_grid", "eps_list", "s_grid"):
            sc.floats(key)
        sc.k_rule()
    if cfg.needs_seed() and seed is None:
        raise ConfigError("seed required for monte-carlo suites")
    return cfg
