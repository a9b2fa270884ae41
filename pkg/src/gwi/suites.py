"""Verification suites driven by the CLI.

Every suite returns a :class:`SuiteResult`: a table, named pass/fail checks
and metadata.  Grid points are independent; ``mapper`` decides whether they run
in-process or on a pool, and results are always listed in grid order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

from . import analytics as an
from . import oracle, series, simulate
from .config import ExperimentConfig, SuiteConfig, parse_k_rule
from .models import GwiModel

Mapper = Callable[[Callable, Iterable], list]

CLAIMS = {
    "identity": "correction identity linking 1/(1-A_n(x)) to n*gamma and h_n(x)",
    "dist": "law of Z_n from the product form of its generating function",
    "prop41": "two-sided envelope of H_n(exp(-s/n)) by (1+gamma s)^(-sigma)",
    "ld": "n^sigma P(|Z_{n+1}/Z_n - 1| > eps | Z_n > 0) converges to q(eps)",
    "variance": "growth rate of J_n = Var(Z_{n+1}/Z_n | Z_n > 0) by regime of sigma",
    "lower": "P(Z_n <= k_n) <= C (1 + gamma n/k_n)^(-sigma) for k_n = o(n)",
    "upper": "tilt bound on P(Z_n >= k_n) for n << k_n << n^2",
    "max": "the same tilt bound for the running maximum M_n",
    "nu": "asymptotics of nu_n = sum_j P(Z_n = j)/j by regime of sigma",
}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteResult:
    name: str
    columns: list[str]
    rows: list[list[Any]]
    checks: list[Check] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "claim": CLAIMS[self.name],
            "meta": self.meta,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
            "columns": self.columns,
            "rows": self.rows,
        }


def _serial(fn, items):
    return [fn(i) for i in items]


def _workers(sc: SuiteConfig, mapper: Mapper) -> int:
    return sc.int("workers", getattr(mapper, "workers", 1))


# -- identity -----------------------------------------------------------------------


def _identity_point(args):
    model, x, n = args
    r = an.identity_residual(model, x, n)
    h = an.h_n_point(model, x, n)
    return [x, n, h, r]


def suite_identity(cfg: ExperimentConfig, sc: SuiteConfig, mapper: Mapper) -> SuiteResult:
    model = cfg.model
    xs = sc.floats("x_grid", [0.0, 0.5, 0.9, 0.99])
    ns = sc.ints("n_list", [10, 100, 1000])
    lf = model.offspring.kind == "linear-fractional"
    rows = mapper(_identity_point, [(model, x, n) for x in xs for n in ns])
    checks = []
    for x, n, h, r in rows:
        budget = 1e-10 if lf else 1e-8 * (1 + n)
        checks.append(Check(f"residual x={x} n={n}", abs(r) <= budget, f"{r:.3g} vs {budget:.3g}"))
        if lf:
            checks.append(Check(f"h_n zero x={x} n={n}", h == 0.0, f"{h!r}"))
    grid = np.linspace(0.0, 0.9999, 2001)
    d = an.delta_fn(model, grid)
    e = an.epsilon_fn(model, grid)
    lo = an.delta_lower_envelope(model, grid)
    tol = 1e-12
    checks.append(Check("lower <= delta <= epsilon", bool(np.all(lo - tol <= d) and np.all(d <= e + tol))))
    checks.append(Check("epsilon nonincreasing", bool(np.all(np.diff(e) <= tol))))
    checks.append(Check("epsilon nonnegative", bool(np.all(e >= -tol))))
    out_rows = [[x, n, h, r, 1e-8 * (1 + n)] for x, n, h, r in rows]
    return SuiteResult("identity", ["x", "n", "h_n", "residual", "budget"], out_rows, checks)


# -- dist ---------------------------------------------------------------------------


def suite_dist(cfg: ExperimentConfig, sc: SuiteConfig, mapper: Mapper) -> SuiteResult:
    model = cfg.model
    ns = sc.ints("n_list", [1, 10, 50, 100, 200])
    K = sc.int("K", cfg.K or 2048)
    jmax = sc.int("jmax", 50)
    method = sc.values.get("method", "auto").strip()
    xs = sc.floats("x_grid", [0.0, 0.25, 0.5, 0.9])
    dists = series.distribution_sweep(model, ns, K, method=method)
    conj = model.is_conjugate
    sig, g = model.sigma, model.gamma
    rows, checks = [], []
    worst_defect = 0.0
    for d in dists:
        worst_defect = max(worst_defect, d.mass_defect)
        j = np.arange(d.K + 1)
        if conj:
            ref = oracle.pmf(sig, g, d.n, j)
            err = np.abs(np.asarray(d.point) - ref)
            mx = float(err.max())
            checks.append(Check(f"oracle n={d.n}", mx <= 1e-9 + d.mass_defect, f"max err {mx:.3g}, defect {d.mass_defect:.3g}"))
        else:
            ref = np.full(d.K + 1, math.nan)
            err = ref
            mx = math.nan
        hx = np.exp(series.log_H_points(model, [d.n], xs)[0][0])
        lower = np.asarray(d.pgf(np.asarray(xs)))
        ok = bool(np.all(lower <= hx * (1 + 1e-12) + 1e-15) and np.all(hx <= lower + d.mass_defect + 1e-12))
        checks.append(Check(f"series vs pointwise n={d.n}", ok))
        for jj in range(min(jmax, d.K) + 1):
            rows.append([d.n, jj, d.point[jj], ref[jj], err[jj], mx, d.mass_defect, d.route])
    cols = ["n", "j", "p_j", "oracle_p_j", "abs_err", "max_abs_err", "mass_defect", "route"]
    return SuiteResult("dist", cols, rows, checks, {"K": K, "mass_defect_ceiling": worst_defect})


# -- prop41 -------------------------------------------------------------------------


def _envelope(args):
    model, n, s = args
    return an.prop41_envelope(model, n, s)


def suite_prop41(cfg: ExperimentConfig, sc: SuiteConfig, mapper: Mapper) -> SuiteResult:
    model = cfg.model
    ns = sc.ints("n_list", [200, 1000])
    c4 = sc.float("c4", an.bounds.DEFAULT_C4)
    lo, hi = sc.floats("bracket", [0.2, 2.0])
    pts = sc.int("s_points", 60)
    explicit = sc.floats("s_grid")
    tasks = []
    for n in ns:
        s = np.asarray(explicit) if explicit else np.geomspace(1e-3, c4 * n, pts)
        tasks.append((model, n, s))
    envs = mapper(_envelope, tasks)
    rows, checks = [], []
    for env in envs:
        rows += [[env.n, s, r] for s, r in zip(env.s, env.ratio)]
        checks.append(Check(f"bracket n={env.n}", lo <= env.lo and env.hi <= hi, f"[{env.lo:.4g}, {env.hi:.4g}] vs [{lo}, {hi}]"))
    return SuiteResult("prop41", ["n", "s", "ratio"], rows, checks, {"c4": c4, "bracket": [lo, hi]})


# -- ld -----------------------------------------------------------------------------


def _ld_point(args):
    model, n, eps, J_cut = args
    return an.ld_ratio_prob(model, n, eps, J_cut=J_cut)


def _mu_for(model: GwiModel, J: int, n_mu: int) -> np.ndarray:
    if model.is_conjugate:
        return an.mu_conjugate(model.sigma, model.gamma, J)
    return an.mu_table(model, n_mu, J)


def suite_ld(cfg: ExperimentConfig, sc: SuiteConfig, mapper: Mapper) -> SuiteResult:
    model = cfg.model
    ns = sc.ints("n_list", [1000, 2000, 4000])
    epss = sc.floats("eps_list", [0.25, 0.5])
    J_cut = sc.int("J_cut", 2000)
    q_J = sc.int("q_J", 500)
    tol = sc.float("tol", 0.05)
    n_mu = sc.int("n_mu", 4 * max(ns))
    mu = _mu_for(model, q_J, n_mu)
    vals = mapper(_ld_point, [(model, n, e, J_cut) for e in epss for n in ns])
    rows, checks = [], []
    it = iter(vals)
    for e in epss:
        q = an.q_eps(model, e, mu, q_J)
        seq = []
        for n in ns:
            b = next(it)
            scaled = n**model.sigma * b.value
            seq.append((n, scaled))
            rows.append([e, n, b.value, b.lower, b.upper, scaled, q.value])
        pl = an.EstimateSeq(f"q({e})", tuple(seq)).plateau
        checks.append(Check(f"plateau eps={e}", pl.spread <= tol, f"spread {pl.spread:.4g}"))
        rel = abs(pl.value / q.value - 1.0) if q.value else math.inf
        checks.append(Check(f"two routes eps={e}", rel <= tol, f"plateau {pl.value:.6g} vs series {q.value:.6g}"))
    mc_reps = sc.int("mc_reps", 0)
    meta: dict[str, Any] = {"J_cut": J_cut, "q_J": q_J}
    if mc_reps:
        mc_n = sc.int("mc_n", 100)
        e = epss[0]
        est = simulate.mc_ratio_deviation(model, mc_n, e, mc_reps, cfg.seed, workers=_workers(sc, mapper))
        exact = an.ld_ratio_prob(model, mc_n, e, J_cut=J_cut).value
        ok = abs(est.value - exact) <= 3 * est.half_width
        checks.append(Check(f"monte-carlo n={mc_n} eps={e}", ok, f"{est.value:.5g} vs {exact:.5g}"))
        meta["monte_carlo"] = est.to_dict()
    cols = ["eps", "n", "prob", "prob_lower", "prob_upper", "scaled", "q_series"]
    return SuiteResult("ld", cols, rows, checks, meta)


# -- variance -----------------------------------------------------------------------


def _jn(args):
    model, n = args
    return an.j_n_exact(model, n)


def suite_variance(cfg: ExperimentConfig, sc: SuiteConfig, mapper: Mapper) -> SuiteResult:
    model = cfg.model
    ns = sc.ints("n_list", [500, 1000, 2000, 4000])
    tol = sc.float("tol", 0.10)
    lo, hi = sc.floats("bracket", [0.2, 5.0])
    sig = model.sigma
    res = mapper(_jn, [(model, n) for n in ns])
    rows, checks = [], []
    meta: dict[str, Any] = {}

    def scale(n):
        if sig < 1:
            return n**sig
        if sig == 1:
            return n / math.log(n)
        return float(n)

    for j in res:
        rows.append([j.n, j.value, j.two_term, j.offspring_term, j.immigration_term, j.mean_term, scale(j.n) * j.value])
    last = res[-1]
    if sig < 1:
        k = an.kappa_estimate(model)
        meta["kappa"] = k
        v = scale(last.n) * last.value
        checks.append(Check("n^sigma J_n vs kappa", abs(v / k - 1) <= tol, f"{v:.6g} vs {k:.6g}"))
    elif sig == 1:
        vals = [r[-1] for r in rows]
        checks.append(Check("J_n n/log n bracket", lo <= min(vals) and max(vals) <= hi, f"[{min(vals):.4g}, {max(vals):.4g}]"))
    elif sig != 2:
        target = 2 * model.gamma / (model.beta - model.gamma)
        v = last.n * last.value
        checks.append(Check("n J_n limit", abs(v / target - 1) <= tol, f"{v:.6g} vs {target:.6g}"))
    mc_reps = sc.int("mc_reps", 0)
    if mc_reps:
        mc_n = sc.int("mc_n", 200)
        est = simulate.mc_conditional_ratio_variance(model, mc_n, mc_reps, cfg.seed, workers=_workers(sc, mapper))
        exact = an.j_n_exact(model, mc_n).value
        ok = abs(est.value - exact) <= 3 * est.half_width
        checks.append(Check(f"monte-carlo n={mc_n}", ok, f"{est.value:.6g} vs {exact:.6g}"))
        meta["monte_carlo"] = est.to_dict()
    cols = ["n", "J_n", "two_term", "offspring_term", "immigration_term", "mean_term", "scaled"]
    return SuiteResult("variance", cols, rows, checks, meta)


# -- deviation bounds ---------------------------------------------------------------


def _lower(args):
    model, n, k, c3 = args
    return an.lower_dev_bound(model, n, k, c3)


def suite_lower(cfg: ExperimentConfig, sc: SuiteConfig, mapper: Mapper) -> SuiteResult:
    model = cfg.model
    ns = sc.ints("n_list", [100, 200, 500, 1000, 2000, 4000])
    rule = sc.k_rule("k_rule") or parse_k_rule("1 * n^1/2")
    c3 = sc.float("c3", an.bounds.DEFAULT_C3)
    reps = mapper(_lower, [(model, n, rule(n), c3) for n in ns])
    rows = [[r.n, r.k_n, r.value, r.prob_lower, r.prob_upper, r.bound_value, r.ratio, r.satisfied] for r in reps]
    worst = max(r.ratio for r in reps)
    checks = [Check(f"ratio <= {c3} at n={r.n}", r.satisfied, f"{r.ratio:.4g}") for r in reps]
    cols = ["n", "k_n", "prob", "prob_lower", "prob_upper", "bound", "ratio", "satisfied"]
    return SuiteResult("lower", cols, rows, checks, {"k_rule": rule.text, "observed_constant": worst, "c3": c3})


def _pairs(sc: SuiteConfig, default_rule: str, default_ns: list[int]) -> list[tuple[int, int]]:
    raw = sc.values.get("pairs")
    if raw:
        out = []
        for tok in raw.replace(",", " ").split():
            a, _, b = tok.partition(":")
            out.append((int(a), int(b)))
        return out
    rule = sc.k_rule("k_rule") or parse_k_rule(default_rule)
    return [(n, rule(n)) for n in sc.ints("n_list", default_ns)]


def _upper(args):
    model, n, k = args
    return an.upper_dev_bound(model, n, k)


def suite_upper(cfg: ExperimentConfig, sc: SuiteConfig, mapper: Mapper) -> SuiteResult:
    model = cfg.model
    pairs = _pairs(sc, "10 * n^1", [50])
    reps_ = mapper(_upper, [(model, n, k) for n, k in pairs])
    workers = _workers(sc, mapper)
    rows, checks = [], []
    for r in reps_:
        mc = simulate.mc_tail(model, r.n, r.k_n, cfg.reps, cfg.seed, workers=workers)
        rr = an.shape_ratio(model, r.n, r.k_n)
        rows.append([r.n, r.k_n, r.value, r.prob_lower, r.prob_upper, r.bound_value, r.extras["k_over_n2"], rr, mc.value, mc.ci_low, mc.ci_high])
        checks.append(Check(f"exact <= bound (n={r.n}, k={r.k_n})", r.satisfied, f"{r.prob_upper:.4g} vs {r.bound_value:.4g}"))
    cols = ["n", "k_n", "prob", "prob_lower", "prob_upper", "bound", "k_over_n2", "shape_ratio", "mc", "mc_ci_low", "mc_ci_high"]
    return SuiteResult("upper", cols, rows, checks, {"reps": cfg.reps})


def suite_max(cfg: ExperimentConfig, sc: SuiteConfig, mapper: Mapper) -> SuiteResult:
    model = cfg.model
    pairs = _pairs(sc, "10 * n^1", [50])
    workers = _workers(sc, mapper)
    rows, checks = [], []
    for n, k in pairs:
        r = an.max_dev_bound(model, n, k, cfg.reps, cfg.seed, workers=workers)
        z = simulate.mc_tail(model, n, k, cfg.reps, cfg.seed, workers=workers)
        rows.append([n, k, r.value, r.prob_lower, r.prob_upper, r.bound_value, z.value, r.extras["hits"]])
        checks.append(Check(f"CI upper <= bound (n={n}, k={k})", r.satisfied, f"{r.prob_upper:.4g} vs {r.bound_value:.4g}"))
        checks.append(Check(f"max dominates terminal (n={n}, k={k})", r.value >= z.value))
    cols = ["n", "k_n", "mc_max", "ci_low", "ci_high", "bound", "mc_terminal", "hits"]
    return SuiteResult("max", cols, rows, checks, {"reps": cfg.reps})


# -- nu -----------------------------------------------------------------------------


def _nu(args):
    model, n = args
    return an.nu_n(model, n)


def suite_nu(cfg: ExperimentConfig, sc: SuiteConfig, mapper: Mapper) -> SuiteResult:
    model = cfg.model
    ns = sc.ints("n_list", [500, 1000, 2000, 4000])
    tol = sc.float("tol", 0.05)
    sig = model.sigma
    vals = mapper(_nu, [(model, n) for n in ns])
    rows, checks = [], []
    for n, v in zip(ns, vals):
        if sig > 1:
            scaled = n * (model.beta - model.gamma) * v.value
        elif sig == 1:
            scaled = v.value * n / math.log(n)
        else:
            scaled = n**sig * v.value
        ref = oracle.nu_sigma1(n) if (model.is_conjugate and sig == 1 and model.gamma == 1) else math.nan
        rows.append([n, v.value, v.lower, v.upper, scaled, ref])
        if not math.isnan(ref):
            ok = v.lower - 1e-12 <= ref <= v.upper + 1e-12 and abs(v.value - ref) <= 1e-9 + v.width
            checks.append(Check(f"oracle n={n}", ok, f"{v.value:.12g} vs {ref:.12g}"))
    if sig > 1:
        last = rows[-1][4]
        checks.append(Check("n (beta-gamma) nu_n -> 1", abs(last - 1) <= tol, f"{last:.6g}"))
    elif sig < 1:
        pl = an.plateau(ns, [r[4] for r in rows])
        checks.append(Check("n^sigma nu_n plateau", pl.spread <= tol, f"spread {pl.spread:.4g}"))
    cols = ["n", "nu_n", "nu_lower", "nu_upper", "scaled", "oracle"]
    return SuiteResult("nu", cols, rows, checks)


SUITE_FUNCS = {
    "identity": suite_identity,
    "dist": suite_dist,
    "prop41": suite_prop41,
    "ld": suite_ld,
    "variance": suite_variance,
    "lower": suite_lower,
    "upper": suite_upper,
    "max": suite_max,
    "nu": suite_nu,
}
