import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwi import DomainError, GwiModel, conjugate_model, make_pgf, oracle, validate_condition_h
from gwi import analytics as an
from gwi.analytics.bounds import upper_bound_value

CONJ = conjugate_model(1.0, 1.0)
POISSON = validate_condition_h(make_pgf("poisson", [1.0]), make_pgf("poisson", [0.5]))
FINITE = validate_condition_h(make_pgf("finite", [0.25, 0.5, 0.25]), make_pgf("poisson", [0.5]))
SKEWED = validate_condition_h(make_pgf("finite", [0.4, 0.3, 0.2, 0.1]), make_pgf("nb", [1.0, 0.5]))


def _bypass(imm):
    return GwiModel.unchecked(make_pgf("finite", [0.0, 1.0]), make_pgf("finite", imm))


# -- correction terms ------------------------------------------------------------------


def test_delta_and_epsilon_examples():
    x = np.linspace(0, 0.99, 7)
    assert np.all(an.delta_fn(conjugate_model(2.0, 0.7), x) == 0.0)
    assert an.delta_fn(POISSON, 0.0) == pytest.approx(0.5 - (1 / (1 - math.exp(-1)) - 1), rel=1e-12)
    assert an.epsilon_fn(CONJ, 0.0) == pytest.approx(0.5, rel=1e-15)
    np.testing.assert_allclose(an.epsilon_fn(conjugate_model(1, 2.0), x), 4 * (1 - x) / (1 + 2 * (1 - x)), rtol=1e-13)
    assert np.all(an.epsilon_fn(FINITE, x) == 0.0)
    with pytest.raises(DomainError):
        an.delta_fn(CONJ, 1.0)
    with pytest.raises(DomainError):
        an.epsilon_fn(POISSON, 1.2)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([CONJ, POISSON, FINITE, SKEWED]), st.floats(0.0, 0.9999))
def test_correction_inequality(m, x):
    tol = 1e-12
    d = an.delta_fn(m, x)
    assert an.delta_lower_envelope(m, x) - tol <= d <= an.epsilon_fn(m, x) + tol


@pytest.mark.parametrize("m", [CONJ, POISSON, FINITE, SKEWED])
def test_epsilon_decreases_to_zero(m):
    x = np.linspace(0.0, 0.9999, 4001)
    e = an.epsilon_fn(m, x)
    assert np.all(np.diff(e) <= 1e-13) and e[-1] < 1e-3 * max(e[0], 1e-300) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([POISSON, FINITE, SKEWED]), st.floats(0.0, 0.99), st.integers(0, 1000))
def test_identity_residual_budget(m, x, n):
    assert abs(an.identity_residual(m, x, n)) <= 1e-8 * (1 + n)


def test_h_n_edges():
    assert an.h_n_point(POISSON, 0.4, 0) == 0.0
    assert an.h_n_point(CONJ, 0.4, 500) == 0.0


# -- limits ------------------------------------------------------------------------------


def test_u_plateau_conjugate():
    seq = an.u_estimate(CONJ, 0.3, [500, 1000, 2000, 4000])
    assert seq.plateau.spread <= 0.02
    assert seq.plateau.value == pytest.approx(1 / 0.7, rel=0.01)


def test_functional_equation_ratio_form():
    ns = [20000, 40000, 80000]
    for x in (0.0, 0.4, 0.8):
        ux = an.u_estimate(POISSON, x, ns).plateau
        uax = an.u_estimate(POISSON, float(POISSON.offspring.eval(x)), ns).plateau
        b = float(POISSON.immigration.eval(x))
        assert ux.value / uax.value == pytest.approx(b, rel=ux.spread + uax.spread + 0.02)


def test_mu_conjugate_values():
    np.testing.assert_allclose(an.mu_conjugate(1.0, 1.0, 30), 1.0, rtol=1e-12)
    j = np.arange(31)
    np.testing.assert_allclose(an.mu_conjugate(3.0, 1.0, 30), (j + 2) * (j + 1) / 2, rtol=1e-12)


def test_mu_estimate_matches_binomial():
    m = conjugate_model(3.0, 1.0)
    seq = an.mu_estimate(m, 4, [1000, 2000, 4000])
    assert seq.plateau.value == pytest.approx(math.comb(6, 2), rel=0.01)


def test_nu_two_routes_agree():
    for m in (CONJ, POISSON, conjugate_model(0.5, 1.0)):
        n = 60
        b = an.nu_n(m, n, K=4000)
        assert an.nu_integral(m, n) == pytest.approx(b.value, rel=1e-6, abs=b.width)


def test_nu_sigma1_oracle():
    for n in (5, 50):
        b = an.nu_n(CONJ, n, K=4096)
        assert b.value == pytest.approx(oracle.nu_sigma1(n), abs=1e-9 + b.width)


def test_j_n_deterministic_offspring():
    m = _bypass([math.exp(-1), 1 - math.exp(-1)])
    j = an.j_n_exact(m, 20)
    dy = m.immigration.variance
    assert j.offspring_term == 0.0
    assert j.two_term == pytest.approx(dy * an.nu_star(m, 20), rel=1e-12)


def test_j_n_matches_monte_carlo_scale():
    # full conditional variance exceeds the two-term form by the mean term
    j = an.j_n_exact(conjugate_model(0.5, 1.0), 200)
    assert j.value == pytest.approx(j.two_term + j.mean_term, rel=1e-12)
    assert j.mean_term > 0


def test_kappa_requires_small_sigma():
    with pytest.raises(DomainError):
        an.kappa(CONJ, [1.0, 1.0], (np.array([0.0, 0.5]), np.array([1.0, 2.0])))


# -- ratio deviations ----------------------------------------------------------------------


def test_a_k_eps_examples():
    assert an.a_k_eps(CONJ, 1, 0.5) == pytest.approx(0.75, abs=1e-15)
    for k in (1, 7, 40):
        assert an.a_k_eps(_bypass([1.0]), k, 0.3) == 0.0


def test_threshold_exact_rationals():
    assert an.deviation_threshold(0.1, 30) == 3
    assert an.deviation_threshold(0.5, 7) == 3


@pytest.mark.parametrize("m", [CONJ, FINITE])
@pytest.mark.parametrize("eps", [0.25, 0.5, 1.0])
def test_second_moment_decay_of_deviation(m, eps):
    a = an.a_table(m, eps, 500)
    k = np.arange(a.size)
    v = k**2 * a
    assert v[250:].max() <= v[1:250].max()


def test_ld_ratio_prob_bypass_is_zero():
    assert an.ld_ratio_prob(_bypass([1.0]), 5, 0.3).value == 0.0


def test_ld_ratio_prob_bracket_and_q_monotone():
    b = an.ld_ratio_prob(CONJ, 100, 0.5)
    assert b.lower <= b.value <= b.upper
    mu = an.mu_conjugate(1.0, 1.0, 300)
    qs = [an.q_eps(CONJ, e, mu).value for e in (0.1, 0.25, 0.5, 1.0, 2.0)]
    assert all(b <= a for a, b in zip(qs, qs[1:]))
    tiny = an.q_eps(FINITE, 10.0, mu)
    assert tiny.value < 1e-3


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 60), st.floats(0.05, 2.0))
def test_chernoff_dominates_exact(j, eps):
    assert an.a_table(SKEWED, eps, j)[j] <= an.chernoff_a(SKEWED, j, eps) + 1e-12


# -- bounds --------------------------------------------------------------------------------


def test_envelope_examples():
    env = an.prop41_envelope(CONJ, 100, [1e-6, 1e-3])
    np.testing.assert_allclose(env.ratio, 1.0, atol=1e-3)
    with pytest.raises(DomainError):
        an.prop41_envelope(CONJ, 100, [500.0])
    with pytest.raises(DomainError):
        an.prop41_envelope(CONJ, 100, [0.0])


def test_envelope_closed_form():
    s = np.geomspace(1e-3, 400, 50)
    env = an.prop41_envelope(conjugate_model(0.5, 2.0), 100, s)
    ref = (1 + 2 * 100 * -np.expm1(-s / 100)) ** -0.5 * (1 + 2 * s) ** 0.5
    np.testing.assert_allclose(env.ratio, ref, rtol=1e-10)


def test_lower_bound_geometric_cdf():
    for n, k in ((100, 10), (1000, 32)):
        r = an.lower_dev_bound(CONJ, n, k)
        exact = 1 - (n / (n + 1)) ** (k + 1)
        assert r.prob_lower - 1e-13 <= exact <= r.prob_upper + 1e-13
        assert r.bound_value == pytest.approx(1 / (1 + n / k))
    with pytest.raises(DomainError):
        an.lower_dev_bound(CONJ, 10, 10)


def test_tilt_sequence_linear_fractional():
    t = an.tilt_sequence(CONJ, 10, 0.5)
    m = np.arange(11)
    np.testing.assert_allclose(t.y, 0.5 / (1 + 0.5 * m), rtol=1e-12)
    assert abs(t.total - math.log(6)) <= 0.5
    assert np.all(an.tilt_sequence(CONJ, 5, 0.0).y == 0.0)
    with pytest.raises(DomainError):
        an.tilt_sequence(CONJ, 5, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 0.9), st.integers(1, 40))
def test_tilt_sequence_decreasing_and_consistent(y0, n):
    t = an.tilt_sequence(SKEWED, n, y0)
    y = t.y
    assert np.all(np.diff(y) < 0)
    a = SKEWED.offspring.eval(1 + y[1:])
    np.testing.assert_allclose(a, 1 + y[:-1], rtol=1e-12)


def test_upper_bound_worked_example():
    assert upper_bound_value(CONJ, 50, 500) == pytest.approx(3.79e-3, rel=2e-3)
    r = an.upper_dev_bound(CONJ, 50, 500)
    assert r.value == pytest.approx((50 / 51) ** 500, rel=1e-9)
    assert r.satisfied
    with pytest.raises(DomainError):
        an.upper_dev_bound(CONJ, 50, 50)
    with pytest.raises(DomainError):
        an.upper_dev_bound(CONJ, 10, 90)


def test_max_bound_shares_right_hand_side():
    r = an.max_dev_bound(CONJ, 20, 80, reps=2000, seed=3)
    assert r.bound_value == upper_bound_value(CONJ, 20, 80)
    assert r.source.startswith("monte-carlo")


# -- result containers -----------------------------------------------------------------------


def test_plateau_and_sequences():
    p = an.plateau([1, 2, 3, 4, 5], [9.0, 5.0, 1.0, 1.1, 0.9])
    assert p.window == (3, 4, 5)
    assert p.spread == pytest.approx(0.2 / 1.0, rel=1e-12)
    with pytest.raises(DomainError):
        an.EstimateSeq("x", ((2, 1.0), (1, 1.0)))
