import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwi import DefectWarning, DomainError, GwiModel, conjugate_model, make_pgf, oracle, validate_condition_h
from gwi import series
from gwi.series import (
    DistVector,
    default_degree,
    distribution_at,
    distribution_sweep,
    initial_dist,
    inverse_moment,
    iterate_pgf_point,
    log_H_points,
    pgf_H_point,
    step_distribution,
)

MODELS = {
    "conj": conjugate_model(1.0, 1.0),
    "poisson": validate_condition_h(make_pgf("poisson", [1.0]), make_pgf("nb", [1.0, 0.5])),
    "finite": validate_condition_h(make_pgf("finite", [0.25, 0.5, 0.25]), make_pgf("poisson", [0.5])),
}


def test_initial_dist():
    d = initial_dist()
    assert d.n == 0 and list(d.coeffs) == [1.0] and d.mass_defect == 0.0


def test_one_step_is_immigration_law():
    d = step_distribution(initial_dist(), MODELS["conj"], 64)
    np.testing.assert_allclose(d.coeffs, 0.5 ** (np.arange(65) + 1.0), rtol=1e-12)


def test_geometric_law_at_ten():
    d = distribution_at(MODELS["conj"], 10, 256)
    j = np.arange(257)
    np.testing.assert_allclose(d.point, (1 / 11) * (10 / 11) ** j, rtol=0, atol=1e-9 + d.mass_defect)


def test_sigma3_law_at_five():
    d = distribution_at(conjugate_model(3.0, 1.0), 5, 300)
    j = np.arange(301)
    err = np.max(np.abs(np.asarray(d.point) - oracle.pmf(3.0, 1.0, 5, j)))
    assert err <= 1e-9 + d.mass_defect


def test_n_zero_returns_initial():
    assert distribution_at(MODELS["poisson"], 0).coeffs.tolist() == [1.0]


def test_deterministic_growth_bypass():
    d1 = make_pgf("finite", [0.0, 1.0])
    m = GwiModel.unchecked(d1, d1)
    for n in (1, 3, 7):
        d = distribution_at(m, n, 16, method="dp")
        assert d.coeffs[n] == pytest.approx(1.0) and math.fsum(d.coeffs) == pytest.approx(1.0)


def test_negative_degree_rejected():
    with pytest.raises(DomainError):
        step_distribution(initial_dist(), MODELS["conj"], -1)


def test_vectors_are_read_only():
    d = distribution_at(MODELS["conj"], 3, 32)
    with pytest.raises(ValueError):
        d.coeffs[0] = 0.5


@pytest.mark.parametrize("name", sorted(MODELS))
def test_dp_and_spectral_routes_agree(name):
    m = MODELS[name]
    a = distribution_at(m, 40, 512, method="dp")
    b = distribution_at(m, 40, 512, method="spectral")
    tol = 1e-12 + a.mass_defect + b.mass_defect
    assert np.max(np.abs(np.asarray(a.point) - np.asarray(b.point))) <= tol


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(MODELS)), st.integers(1, 30), st.integers(8, 200))
def test_law_invariants(name, n, K):
    d = distribution_at(MODELS[name], n, K, method="dp")
    c = np.asarray(d.coeffs)
    assert np.all(c >= 0)
    s = math.fsum(c)
    assert s <= 1.0 + 1e-12
    assert s + d.mass_defect >= 1.0 - 1e-12


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(sorted(MODELS)), st.integers(2, 25), st.integers(4, 60))
def test_defect_nondecreasing_under_steps(name, n, K):
    ds = distribution_sweep(MODELS[name], list(range(1, n + 1)), K, method="dp")
    defects = [d.mass_defect for d in ds]
    assert all(b >= a for a, b in zip(defects, defects[1:]))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from([0.5, 1.0, 3.0]), st.integers(0, 300), st.floats(0.0, 1.0))
def test_pointwise_H_matches_closed_form(g, s, n, x):
    v = pgf_H_point(conjugate_model(s, g), n, x)
    assert v == pytest.approx(float(oracle.H(s, g, n, x)), rel=1e-12)


def test_pointwise_H_edges():
    m = MODELS["poisson"]
    assert pgf_H_point(m, 0, 0.3) == 1.0
    assert pgf_H_point(m, 50, 1.0) == 1.0


def test_log_H_points_shape():
    logh, u = log_H_points(MODELS["finite"], [0, 5, 10], [0.0, 0.5])
    assert logh.shape == (3, 2) and np.all(logh[0] == 0.0)


def test_iterate_pgf_point():
    a = MODELS["conj"].offspring
    assert iterate_pgf_point(a, 0.37, 0) == 0.37
    for n in (1, 10, 1000):
        assert iterate_pgf_point(a, 0.0, n) == pytest.approx(n / (n + 1), rel=1e-14)
        assert iterate_pgf_point(MODELS["poisson"].offspring, 1.0, n) == 1.0


def test_inverse_moment_log_series():
    m = MODELS["conj"]
    assert inverse_moment(m, 0, 1.0).value == 1.0
    for n in (1, 10, 100):
        b = inverse_moment(m, n, 1.0)
        assert b.lower - 1e-12 <= oracle.inverse_moment_sigma1(n) <= b.upper + 1e-12
        assert b.value == pytest.approx(oracle.inverse_moment_sigma1(n), abs=1e-9 + b.width)


def test_inverse_moment_large_power_isolates_zero():
    m = MODELS["poisson"]
    v = inverse_moment(m, 20, 50.0).value
    assert v == pytest.approx(pgf_H_point(m, 20, 0.0), abs=1e-6)


def test_default_degree():
    assert default_degree(MODELS["conj"], 10) == 256
    assert default_degree(MODELS["conj"], 100) == 800


def test_budget_warning():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        d = distribution_at(MODELS["conj"], 200, 32, method="dp", budget=1e-12)
    assert any(issubclass(x.category, DefectWarning) for x in w)
    assert d.warning


def test_brackets_and_serialisation(tmp_path):
    d = distribution_at(MODELS["conj"], 20, 512)
    c = d.cdf_bracket(10)
    exact = float(oracle.cdf(1.0, 1.0, 20, 10))
    assert c.lower - 1e-14 <= exact <= c.upper + 1e-14
    t = d.tail_bracket(11)
    assert t.lower - 1e-14 <= 1 - exact <= t.upper + 1e-14
    with pytest.raises(DomainError):
        d.cdf_bracket(10**6)
    text = d.to_csv(tmp_path / "law.csv")
    assert text.splitlines()[0].startswith("# ") and "j,p_j" in text
    assert (tmp_path / "law.csv").read_text() == text
    assert isinstance(d, DistVector) and '"route"' in d.to_json()


def test_spectral_bracket_contains_truth():
    m = conjugate_model(0.5, 1.0)
    d = distribution_at(m, 3000, 200, method="spectral")
    ref = oracle.pmf(0.5, 1.0, 3000, np.arange(201))
    assert np.all(np.asarray(d.coeffs) <= ref + 1e-18)
    assert np.all(ref <= np.asarray(d.upper) + 1e-18)


def test_weighted_sum_charges_defect():
    d = distribution_at(MODELS["conj"], 100, 64, method="dp")
    b = series.weighted_sum(d, np.ones(d.K + 1), 1.0)
    assert b.lower <= 1.0 <= b.upper + 1e-12
