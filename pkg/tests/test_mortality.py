import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roster_forensics.mortality import (MortalityCohort, Patient, RiskCurve, RiskGrid, TailModel,
                                        acuity_shift, excess_and_multiple_testing,
                                        expected_mortality, load_cohort, poisson_binomial_pmf,
                                        poisson_tail, spike_tail, spike_tail_clustered)
from roster_forensics.null_models import CapacityError


def hand(ps):
    """Expected count and SE with exact rationals."""
    fr = [Fraction(p).limit_denominator(10**6) for p in ps]
    return float(sum(fr)), math.sqrt(float(sum(p * (1 - p) for p in fr)))


@pytest.mark.parametrize("ps,expected,se", [
    ([0.5, 0.5], 1.0, math.sqrt(0.5)),
    ([0.1] * 10, 1.0, math.sqrt(0.9)),
    ([0.0, 1.0, 0.0], 1.0, 0.0),
])
def test_expected_mortality_fixtures(ps, expected, se):
    e, s = expected_mortality(MortalityCohort.from_probabilities(ps))
    assert (e, s) == (expected, se) == hand(ps)


def brute_force_pmf(ps):
    out = np.zeros(len(ps) + 1)
    for outcome in itertools.product((0, 1), repeat=len(ps)):
        out[sum(outcome)] += math.prod(p if o else 1 - p for p, o in zip(ps, outcome))
    return out


@given(st.lists(st.floats(0, 1), min_size=0, max_size=12))
@settings(max_examples=80, deadline=None)
def test_convolution_matches_enumeration(ps):
    np.testing.assert_allclose(poisson_binomial_pmf(ps), brute_force_pmf(ps), atol=1e-12)


def test_convolution_fifteen_patients():
    ps = np.linspace(0.01, 0.9, 15)
    np.testing.assert_allclose(poisson_binomial_pmf(ps), brute_force_pmf(ps), atol=1e-12)


def test_pinned_poisson_tail():
    mpmath.mp.dps = 40
    oracle = 1 - mpmath.nsum(lambda k: mpmath.e ** -3 * mpmath.mpf(3) ** k / mpmath.factorial(k), [0, 12])
    got = spike_tail(13, rate=3.0, model="poisson")
    assert got == pytest.approx(float(oracle), rel=1e-10)
    assert got == pytest.approx(1.614904855592411537e-05, rel=1e-10)


@given(st.floats(0.01, 50), st.integers(0, 120))
@settings(max_examples=100, deadline=None)
def test_poisson_tail_against_mpmath(lam, k):
    mpmath.mp.dps = 30
    lam_m = mpmath.mpf(lam)
    want = 1 - mpmath.nsum(lambda j: mpmath.e ** -lam_m * lam_m ** j / mpmath.factorial(j), [0, k - 1]) \
        if k > 0 else mpmath.mpf(1)
    got = poisson_tail(k, lam)
    assert abs(got - float(want)) <= 1e-12 + 1e-9 * float(want)


def test_simple_tails():
    c = MortalityCohort.from_probabilities([0.5, 0.5])
    assert spike_tail(2, c) == 0.25
    assert spike_tail(0, c) == 1.0
    assert spike_tail(0, rate=2.0, model=TailModel.POISSON) == 1.0
    with pytest.raises(ValueError):
        spike_tail(-1, c)
    with pytest.raises(CapacityError):
        spike_tail(3, MortalityCohort.from_probabilities([0.01] * 10_001))


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
@settings(max_examples=60, deadline=None)
def test_tail_non_increasing(ps):
    c = MortalityCohort.from_probabilities(ps)
    tails = [spike_tail(k, c) for k in range(len(ps) + 2)]
    assert all(b <= a + 1e-15 for a, b in zip(tails, tails[1:]))
    ptails = [spike_tail(k, c, model="poisson") for k in range(len(ps) + 2)]
    assert all(b <= a + 1e-15 for a, b in zip(ptails, ptails[1:]))


@given(st.lists(st.floats(0, 1), min_size=0, max_size=20), st.integers(0, 20))
@settings(max_examples=80, deadline=None)
def test_cohort_additivity(ps, cut):
    whole = MortalityCohort.from_probabilities(ps)
    left = MortalityCohort.from_probabilities(ps[:cut])
    right = MortalityCohort.from_probabilities(ps[cut:])
    assert whole.expected_deaths == pytest.approx(left.expected_deaths + right.expected_deaths, abs=1e-12)
    assert whole.se ** 2 == pytest.approx(left.se ** 2 + right.se ** 2, abs=1e-12)
    assert 0 <= whole.expected_deaths <= len(ps)
    assert (whole.se == 0) == all(p in (0.0, 1.0) for p in ps)


def test_patient_validation():
    with pytest.raises(ValueError, match="x1"):
        Patient("x1", 1.2)


def test_clustered_tail():
    cohort = load_cohort(_fixture("cohort.csv"))
    p0, se0 = spike_tail_clustered(4, cohort, 0.0, seed=1, replicates=40_000)
    assert abs(p0 - spike_tail(4, cohort)) < 4 * se0
    p1, se1 = spike_tail_clustered(4, cohort, 1.0, seed=1, replicates=40_000)
    assert p1 > p0 + 4 * math.hypot(se0, se1)
    assert spike_tail_clustered(4, cohort, 0.5, seed=9, replicates=5000, threads=3) == \
        spike_tail_clustered(4, cohort, 0.5, seed=9, replicates=5000, threads=1)


def _fixture(name):
    from conftest import fixture_path
    return fixture_path(name)


# ---------------------------------------------------------------- acuity

def test_acuity_ratio_three():
    curve = RiskCurve.from_csv(_fixture("curve.csv"))
    cohort = MortalityCohort(tuple(Patient(f"b{i}", 0.05, 28.0) for i in range(10)))
    base, shifted, ratio = acuity_shift(cohort, curve, -2.0)
    assert base == pytest.approx(0.5) and shifted == pytest.approx(1.5)
    assert ratio == pytest.approx(3.0, rel=1e-12)
    assert acuity_shift(cohort, curve, 0.0)[2] == 1.0


def test_acuity_domain_error_names_patient():
    curve = RiskCurve.from_csv(_fixture("curve.csv"))
    cohort = MortalityCohort((Patient("ok", 0.1, 30.0), Patient("tiny", 0.6, 22.5)))
    with pytest.raises(ValueError, match="tiny"):
        acuity_shift(cohort, curve, -1.0)


def test_curve_must_be_monotone():
    with pytest.raises(ValueError):
        RiskCurve("gestation_weeks", (24, 26), (0.1, 0.2))


@given(st.floats(-10, 0))
@settings(max_examples=60, deadline=None)
def test_adverse_shift_never_lowers_expectation(shift):
    curve = RiskCurve.from_csv(_fixture("curve.csv"))
    cohort = load_cohort(_fixture("cohort.csv"))
    lowest = min(p.gestation_weeks for p in cohort.patients)
    if lowest + shift < curve.domain[0]:
        return
    base, moved, ratio = acuity_shift(cohort, curve, shift)
    assert moved >= base - 1e-12 and ratio >= 1 - 1e-12


def test_risk_grid():
    grid = RiskGrid((24, 28), (500, 1000), ((0.4, 0.3), (0.2, 0.1)))
    assert grid(26, 750) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        grid(30, 750)


# ---------------------------------------------------------------- multiplicity

def test_multiple_units():
    r = excess_and_multiple_testing(0.005, 200)
    assert r.probability == pytest.approx(0.63304217827383261, rel=1e-14)
    assert r.probability == pytest.approx(1 - 0.995 ** 200, rel=1e-12)
    assert "independent" in r.assumption
    assert excess_and_multiple_testing(0.3, 1).probability == pytest.approx(0.3, rel=1e-15)
    assert excess_and_multiple_testing(0.0, 50).probability == 0.0
    assert excess_and_multiple_testing(1e-12, 1000).probability == pytest.approx(1e-9, rel=1e-6)
