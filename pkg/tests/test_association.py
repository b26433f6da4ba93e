import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import stats

from roster_forensics.association import (Assoc2x2, Sided, build_table, combine_pvalues_fisher,
                                          combine_pvalues_naive_product, fisher_exact, relative_risk)
from roster_forensics.null_models import WardScenario, event_block
from roster_forensics.roster import LookupFailure


def enumerate_one_sided(a, b, c, d, two_sided=False):
    """Exact rational hypergeometric enumeration, independent of the log-space code."""
    total, succ, draws = a + b + c + d, a + c, a + b
    denom = math.comb(total, draws)
    pmf = {x: Fraction(math.comb(succ, x) * math.comb(total - succ, draws - x), denom)
           for x in range(max(0, draws - (total - succ)), min(draws, succ) + 1)}
    if two_sided:
        return float(sum(p for p in pmf.values() if p <= pmf[a]))
    return float(sum(p for x, p in pmf.items() if x >= a))


def test_archetype_table():
    r = fisher_exact(Assoc2x2(2, 0, 1, 7))
    assert abs(r.p_value - 1 / 15) < 1e-12
    assert r.effect_size_raw == math.inf
    assert r.effect_size_corrected == pytest.approx((2.5 / 4) / (0.5 / 8))
    assert r.to_dict()["effect_size_raw"] == "+inf"


def test_balanced_table():
    assert fisher_exact(Assoc2x2(1, 1, 1, 1)).p_value == pytest.approx(5 / 6, abs=1e-12)


def test_degenerate_margin():
    r = fisher_exact(Assoc2x2(0, 0, 3, 4))
    assert r.degenerate and r.p_value == 1.0
    assert math.isnan(r.effect_size_raw) and r.to_dict()["effect_size_raw"] is None
    assert math.isfinite(r.effect_size_corrected)


def test_negative_cell_rejected():
    with pytest.raises(ValueError):
        Assoc2x2(-1, 0, 0, 0)


def test_large_tables_do_not_overflow():
    r = fisher_exact(Assoc2x2(40, 10, 3000, 7000))
    ref = stats.fisher_exact([[40, 10], [3000, 7000]], alternative="greater").pvalue
    assert r.p_value == pytest.approx(ref, rel=1e-9)


def test_build_table_from_chart(tiny_chart, tiny_schedule):
    assert build_table(tiny_chart, "A", tiny_schedule) == Assoc2x2(2, 0, 1, 7)
    assert build_table(tiny_chart, "C", tiny_schedule) == Assoc2x2(0, 2, 8, 0)
    with pytest.raises(LookupFailure):
        build_table(tiny_chart, "Q", tiny_schedule)


def test_random_tables_against_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        total = int(rng.integers(2, 61))
        cuts = np.sort(rng.integers(0, total + 1, 3))
        a, b, c, d = np.diff(np.concatenate([[0], cuts, [total]])).tolist()
        t = Assoc2x2(a, b, c, d)
        if t.degenerate:
            continue
        assert abs(fisher_exact(t).p_value - enumerate_one_sided(a, b, c, d)) < 1e-10
        assert abs(fisher_exact(t, Sided.TWO).p_value - enumerate_one_sided(a, b, c, d, True)) < 1e-10


tables = st.tuples(*[st.integers(0, 25)] * 4).map(lambda t: Assoc2x2(*t))


@given(tables)
@settings(max_examples=200, deadline=None)
def test_result_invariants(t):
    r = fisher_exact(t)
    assert 0.0 <= r.p_value <= 1.0
    assert math.isfinite(r.effect_size_corrected) and r.effect_size_corrected > 0
    d = r.to_dict()
    assert "p_value" in d and "effect_size_corrected" in d


@given(tables)
@settings(max_examples=200, deadline=None)
def test_scipy_agreement(t):
    assume(not t.degenerate)
    table = [[t.a, t.b], [t.c, t.d]]
    assert fisher_exact(t).p_value == pytest.approx(
        stats.fisher_exact(table, alternative="greater").pvalue, abs=1e-10)
    assert fisher_exact(t, Sided.TWO).p_value == pytest.approx(
        stats.fisher_exact(table).pvalue, abs=1e-10)


@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 40))
@settings(max_examples=100, deadline=None)
def test_one_sided_monotone_in_a(events, exposure, others):
    # margins fixed: events = a + b, exposure = a + c, grand total fixed
    total = exposure + others
    assume(events <= total)
    prev = 1.0 + 1e-12
    for a in range(max(0, events - others), min(events, exposure) + 1):
        t = Assoc2x2(a, events - a, exposure - a, others - events + a)
        p = fisher_exact(t).p_value
        assert p <= prev + 1e-12
        prev = p


def test_relative_risk_plain():
    raw, corr = relative_risk(Assoc2x2(4, 2, 6, 8))
    assert raw == pytest.approx((4 / 10) / (2 / 10))
    assert corr == pytest.approx((4.5 / 11) / (2.5 / 11))


# ---------------------------------------------------------------- combination

def test_fisher_combination_oracle():
    # chi-square with 2k df against scipy, and the pinned series values
    for k in (1, 2, 3, 5, 10):
        x = -2 * k * math.log(0.1)
        assert combine_pvalues_fisher([0.1] * k) == pytest.approx(stats.chi2.sf(x, 2 * k), rel=1e-12)
    assert combine_pvalues_fisher([0.1] * 3) == pytest.approx(0.031766296776134928, rel=1e-12)
    assert combine_pvalues_fisher([0.1] * 5) == pytest.approx(0.010651559439528016, rel=1e-12)
    assert combine_pvalues_fisher([1.0, 1.0]) == 1.0


@pytest.mark.parametrize("bad", [[], [0.0, 0.5], [1.5], [-0.1]])
def test_combination_domain(bad):
    with pytest.raises(ValueError):
        combine_pvalues_fisher(bad)
    with pytest.raises(ValueError):
        combine_pvalues_naive_product(bad)


def test_naive_product_flagged():
    n = combine_pvalues_naive_product([0.1] * 3)
    assert n.value == pytest.approx(1e-3)
    assert n.to_dict()["invalid_as_p_value"] is True
    assert n.inflation == pytest.approx(31.766, rel=1e-3)


@given(st.lists(st.floats(1e-6, 0.999), min_size=1, max_size=12))
@settings(max_examples=200, deadline=None)
def test_product_below_valid_combination(ps):
    n = combine_pvalues_naive_product(ps)
    if len(ps) == 1:
        assert n.value == pytest.approx(n.valid_combined)
    else:
        assert n.value < n.valid_combined


@given(st.floats(0.01, 0.9))
@settings(max_examples=50, deadline=None)
def test_inflation_grows_with_k(p):
    inflations = [combine_pvalues_naive_product([p] * k).inflation for k in (2, 4, 8, 16)]
    assert all(x < y for x, y in zip(inflations, inflations[1:]))


# ---------------------------------------------------------------- null calibration

def test_super_uniform_under_uniform_null():
    scen = WardScenario(200, {"T": frozenset(range(0, 200, 3)), "O": frozenset(range(1, 200, 3))},
                        12, seed=11)
    R = 20_000
    events = np.concatenate([event_block(scen, b, 2048) for b in range(10)])[:R]
    duty = np.zeros(200, dtype=np.int64)
    duty[sorted(scen.nurse_schedules["T"])] = 1
    a = events @ duty
    b = 12 - a
    c = int(duty.sum()) - a
    d = 200 - 12 - c
    ps = np.array([fisher_exact(Assoc2x2(*t)).p_value for t in zip(a, b, c, d)])
    for alpha in (0.01, 0.05, 0.1):
        rate = float(np.mean(ps <= alpha))
        assert rate <= alpha + 3 * math.sqrt(alpha * (1 - alpha) / R)
