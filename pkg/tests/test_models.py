import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwi import (
    ConditionHError,
    DomainError,
    GwiModel,
    NormalizationError,
    conjugate_model,
    make_pgf,
    pgf_eval,
    pgf_inverse_real,
    validate_condition_h,
)
from gwi.errors import CriticalityError, ImmigrationZeroMassError, OffspringZeroMassError
from gwi.models import make_finite_support, make_linear_fractional, make_negative_binomial_conjugate, make_poisson

pos = st.floats(0.05, 5.0)


# -- families ----------------------------------------------------------------------


def test_finite_support_examples():
    d = make_finite_support([1.0])
    assert d.eval(0.3) == 1.0 and d.mean == 0.0
    f = make_finite_support([0.25, 0.5, 0.25])
    assert f.mean == 1.0
    assert float(f.factorial_moment(2)) / 2 == 0.25
    assert f.eval(0.5) == pytest.approx(0.5625, abs=1e-15)
    assert pgf_eval(f, 1.0, order=1) == pytest.approx(1.0)


def test_finite_support_errors():
    with pytest.raises(NormalizationError):
        make_finite_support([0.3, 0.5])
    with pytest.raises(DomainError):
        make_finite_support([1.5, -0.5])
    with pytest.raises(DomainError):
        make_finite_support([])


def test_linear_fractional_examples():
    a = make_linear_fractional(1.0)
    assert a.eval(0.0) == 0.5
    assert a.radius == 2.0
    assert [float(a.factorial_moment(k)) for k in (1, 2, 3)] == [1.0, 2.0, 6.0]
    assert pgf_eval(a, 1.0) == 1.0
    assert pgf_eval(a, 1.0, order=2) == pytest.approx(2.0)
    x = np.linspace(-1.5, 1.9, 9)
    np.testing.assert_allclose(a.eval(x), 1.0 / (2.0 - x), rtol=1e-15)
    with pytest.raises(DomainError):
        make_linear_fractional(0.0)
    with pytest.raises(DomainError):
        a.eval(2.0)


def test_negative_binomial_examples():
    b = make_negative_binomial_conjugate(1.0, 1.0)
    np.testing.assert_allclose(b.coefficients(20), 0.5 ** (np.arange(21) + 1.0), rtol=1e-14)
    assert make_negative_binomial_conjugate(3.0, 1.0).mean == 3.0
    with pytest.raises(DomainError):
        make_negative_binomial_conjugate(-1.0, 1.0)


def test_poisson_examples():
    p = make_poisson(1.0)
    assert float(p.factorial_moment(2)) / 2 == 0.5
    assert p.eval(0.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert p.radius == math.inf
    with pytest.raises(DomainError):
        make_poisson(0.0)


def test_make_pgf_dispatch():
    assert make_pgf("lf", [2.0]).gamma == 2.0
    with pytest.raises(DomainError, match="takes 2"):
        make_pgf("negative-binomial", [1.0])
    with pytest.raises(DomainError, match="unknown family"):
        make_pgf("zeta", [1.0])


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["lf", "nb", "poisson", "finite"]), pos, pos)
def test_coefficients_are_a_probability_law(family, a, b):
    params = {"lf": [a], "nb": [a, b], "poisson": [a], "finite": [1 / 3, 1 / 3, 1 / 3]}[family]
    m = make_pgf(family, params)
    c = m.coefficients(400)
    assert np.all(c >= 0)
    assert math.fsum(c) + m.tail_mass(400) == pytest.approx(1.0, abs=1e-12)
    assert m.eval(1.0) == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["lf", "nb", "poisson"]), pos, pos, st.floats(1e-12, 1.0))
def test_complement_matches_direct_evaluation(family, a, b, u):
    params = {"lf": [a], "nb": [a, b], "poisson": [a]}[family]
    m = make_pgf(family, params)
    assert m.complement(u) == pytest.approx(1.0 - m.eval(1.0 - u), rel=1e-9, abs=1e-15)
    assert m.excess(u) == pytest.approx(m.eval(1.0 - u) - (1.0 - u), rel=1e-8, abs=1e-15)


# -- inversion -----------------------------------------------------------------------


def test_inverse_examples():
    a = make_linear_fractional(1.0)
    assert pgf_inverse_real(a, 1.0) == 1.0
    assert pgf_inverse_real(a, 1.5) == pytest.approx(4.0 / 3.0, rel=1e-14)
    assert pgf_inverse_real(a, 2.5) == pytest.approx(2.0 - 1.0 / 2.5, rel=1e-14)
    with pytest.raises(DomainError):
        pgf_inverse_real(a, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["lf", "poisson", "finite"]), st.floats(0.1, 3.0), st.floats(1e-6, 5.0))
def test_inverse_round_trip(family, g, y):
    m = make_pgf(family, {"lf": [g], "poisson": [1.0], "finite": [0.25, 0.5, 0.25]}[family])
    x = pgf_inverse_real(m, 1.0 + y)
    assert 1.0 <= x < m.radius
    assert m.eval(x) == pytest.approx(1.0 + y, rel=1e-10)


# -- the validated pair -------------------------------------------------------------


def test_conjugate_parameters():
    m = conjugate_model(1.0, 1.0)
    assert (m.alpha, m.beta, m.gamma, m.sigma, m.rho) == (1.0, 1.0, 1.0, 1.0, 6.0)
    assert m.lam == 0.0 and m.is_conjugate


def test_finite_offspring_parameters():
    m = validate_condition_h(make_finite_support([0.5, 0, 0.5]), make_negative_binomial_conjugate(1, 1))
    assert (m.alpha, m.gamma, m.sigma) == (1.0, 0.5, 2.0)
    assert not m.is_conjugate


@pytest.mark.parametrize(
    "off, imm, err",
    [
        ([0.3, 0.7], [0.5, 0.5], CriticalityError),
        ([0.0, 1.0], [0.5, 0.5], OffspringZeroMassError),
        ([0.5, 0.0, 0.5], [1.0], ImmigrationZeroMassError),
        ([0.5, 0.0, 0.5], [0.0, 1.0], ImmigrationZeroMassError),
    ],
)
def test_condition_violations_name_the_clause(off, imm, err):
    with pytest.raises(err) as exc:
        validate_condition_h(make_finite_support(off), make_finite_support(imm))
    assert isinstance(exc.value, ConditionHError)
    assert err.clause in str(exc.value)


@settings(max_examples=30, deadline=None)
@given(pos, pos)
def test_sigma_is_beta_over_gamma(s, g):
    m = conjugate_model(s, g)
    assert m.sigma == pytest.approx(m.beta / m.gamma, rel=1e-15)
    assert m.sigma == pytest.approx(s, rel=1e-12)


def test_unchecked_bypass():
    d1 = make_finite_support([0.0, 1.0])
    m = GwiModel.unchecked(d1, d1)
    assert not m.validated and m.gamma == 0.0
