import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gwi import DegenerateConditioning, DomainError, GwiModel, conjugate_model, make_pgf, oracle, validate_condition_h
from gwi import analytics as an
from gwi import simulate as sim

CONJ = conjugate_model(1.0, 1.0)


def test_alias_table_frequencies():
    p = np.array([0.1, 0.0, 0.45, 0.3, 0.15])
    draws = sim.AliasTable(p).sample(np.random.default_rng(1), 200000)
    counts = np.bincount(draws, minlength=p.size)
    assert counts[1] == 0
    keep = p > 0
    assert stats.chisquare(counts[keep], 200000 * p[keep]).pvalue > 1e-4


@pytest.mark.parametrize(
    "off, imm",
    [
        (("lf", [1.0]), ("nb", [1.5, 1.0])),
        (("poisson", [1.0]), ("poisson", [0.7])),
        (("finite", [0.25, 0.5, 0.25]), ("finite", [0.5, 0.25, 0.25])),
    ],
)
def test_sum_draws_follow_exact_law(off, imm):
    m = validate_condition_h(make_pgf(*off), make_pgf(*imm))
    s = sim.build_sampler(m.offspring)
    rng = np.random.default_rng(7)
    k = np.full(100000, 3, dtype=np.int64)
    x = s.sum_draw(rng, k)
    law = np.convolve(np.convolve(m.offspring.coefficients(60), m.offspring.coefficients(60)), m.offspring.coefficients(60))[:61]
    obs = np.bincount(np.minimum(x, 60), minlength=61)
    exp = 100000 * law
    keep = exp > 20
    exp_k = exp[keep] * obs[keep].sum() / exp[keep].sum()
    assert stats.chisquare(obs[keep], exp_k).pvalue > 1e-4


def test_deterministic_growth_bypass():
    d1 = make_pgf("finite", [0.0, 1.0])
    t = sim.simulate_batch(GwiModel.unchecked(d1, d1), 9, 50, np.random.default_rng(0))
    assert np.all(t.z_n == 9) and np.all(t.m_n == 9) and np.all(t.z_next == 10)


def test_tail_estimate_covers_closed_form():
    est = sim.mc_tail(CONJ, 10, [5, 20], 40000, seed=11)
    for e, k in zip(est, (5, 20)):
        assert e.ci_low <= float(oracle.sf(1, 1, 10, k)) <= e.ci_high
    assert est[0].conditioning_count + est[0].zero_count + est[0].overflow_count == 40000


def test_max_dominates_terminal_on_shared_streams():
    z = sim.mc_tail(CONJ, 15, 30, 20000, seed=5)
    m = sim.mc_max_tail(CONJ, 15, 30, 20000, seed=5)
    assert m.hits >= z.hits


def test_ratio_deviation_matches_exact():
    est = sim.mc_ratio_deviation(CONJ, 30, 0.5, 60000, seed=2)
    exact = an.ld_ratio_prob(CONJ, 30, 0.5).value
    assert abs(est.value - exact) <= 3 * est.half_width


def test_variance_estimate_matches_exact():
    est = sim.mc_conditional_ratio_variance(CONJ, 30, 60000, seed=4)
    exact = an.j_n_exact(CONJ, 30).value
    assert abs(est.value - exact) <= 3 * est.half_width


def test_reproducible_and_seed_sensitive():
    a = sim.mc_tail(CONJ, 8, 10, 5000, seed=1)
    assert a == sim.mc_tail(CONJ, 8, 10, 5000, seed=1)
    assert a.hits != sim.mc_tail(CONJ, 8, 10, 5000, seed=2).hits


def test_worker_count_does_not_change_bits():
    reps = 2 * sim.BLOCK + 17
    a = sim.mc_conditional_ratio_variance(CONJ, 5, reps, seed=8, workers=1)
    b = sim.mc_conditional_ratio_variance(CONJ, 5, reps, seed=8, workers=3)
    assert a == b


def test_degenerate_conditioning():
    d1 = make_pgf("finite", [0.0, 1.0])
    dead = GwiModel.unchecked(d1, make_pgf("finite", [1.0]))
    with pytest.raises(DegenerateConditioning):
        sim.mc_ratio_deviation(dead, 5, 0.5, 100, seed=0)
    with pytest.raises(DegenerateConditioning):
        sim.mc_conditional_ratio_variance(dead, 5, 100, seed=0)
    with pytest.raises(DomainError):
        sim.mc_ratio_deviation(CONJ, 5, 0.0, 100, seed=0)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([0.1, 0.25, 0.3, 0.5, 0.7, 1.0, 1.5]), st.lists(st.integers(0, 10**6), min_size=1, max_size=20))
def test_exact_floor_mul(eps, z):
    z = np.asarray(z, dtype=np.int64)
    ref = [math.floor(Fraction(eps) * int(v)) for v in z]
    assert sim.exact_floor_mul(eps, z).tolist() == ref


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_contains_point(hits, extra):
    n = hits + extra
    lo, hi = sim.wilson(hits, n)
    assert 0 <= lo <= hits / n <= hi <= 1


def test_estimate_serialises():
    d = sim.mc_tail(CONJ, 3, 2, 1000, seed=0).to_dict()
    assert d["source"] == "monte-carlo" and d["reps"] == 1000
