import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roster_forensics.association import fisher_exact
from roster_forensics.timeline import (DAY, ClockWindow, RecordingRegime, SnapRule, attribute_deaths,
                                       attribution_table, clock_windows, day_night_rota, sign_test,
                                       simulate_ward_deaths)

HANDOVERS = RecordingRegime.handovers([420, 1140])


def ward(rota=None, days=28, lead=30, lag=30):
    shifts = day_night_rota(days, rota or {"P": "day", "Q": "night"}, 420, 720)
    return shifts, clock_windows(shifts, lead, lag)


def run(regime=HANDOVERS, replicates=300, rate=1.0, seed=3, rota=None, threads=1, **kw):
    shifts, windows = ward(rota, **kw)
    return simulate_ward_deaths(rate, kw.get("days", 28), regime, shifts, windows, seed, replicates,
                                threads=threads)


def test_regime_validation():
    with pytest.raises(ValueError):
        RecordingRegime((420, 420))
    with pytest.raises(ValueError):
        RecordingRegime((0, 1440))
    assert HANDOVERS.check_times == (0, 420, 1140)
    assert RecordingRegime.handovers([420, 1140], midnight=False).check_times == (420, 1140)
    assert HANDOVERS.max_gap == 720


def test_next_check_rule():
    rec = HANDOVERS.record(np.array([0.0, 1.0, 419.9, 420.0, 420.5, 1139, 1141, 1439.99, 1440 + 5]))
    np.testing.assert_array_equal(rec, [0, 420, 420, 420, 1140, 1140, 1440, 1440, 1440 + 420])


@given(st.lists(st.floats(0, 30 * DAY, allow_nan=False), max_size=50),
       st.lists(st.integers(0, DAY - 1), min_size=1, max_size=6, unique=True))
@settings(max_examples=100, deadline=None)
def test_snapping_properties(times, checks):
    regime = RecordingRegime(tuple(sorted(checks)))
    t = np.array(times)
    rec = regime.record(t)
    assert (rec >= t).all()
    assert (rec - t < regime.max_gap + 1e-9).all()
    assert set(np.mod(rec, DAY).astype(int)) <= set(regime.check_times)


def test_no_snapping_is_identity():
    t = np.array([3.5, 800.25])
    np.testing.assert_array_equal(RecordingRegime(snap_rule="none").record(t), t)


def test_window_invariants():
    shifts, windows = ward(days=2)
    for w in windows:
        s = next(s for s in shifts if s.id == w.shift_id)
        assert w.clock_in <= s.start and w.clock_out >= s.end
    with pytest.raises(ValueError):
        clock_windows(shifts, lead=-1)


def test_hand_built_day():
    # P works days; a death at 03:20 during the night shift is certified at the 07:00 handover
    _, windows = ward(days=2)
    got = attribute_deaths([DAY + 200.0], HANDOVERS, windows)
    assert got["P"] == (0, 1)
    assert got["Q"] == (1, 1)
    # a death just after her window closes is pushed to midnight and leaves her
    assert attribute_deaths([1175.0], HANDOVERS, windows)["P"] == (0, 0)


def test_no_snapping_means_no_excess():
    r = run(RecordingRegime(snap_rule=SnapRule.NONE), replicates=200)
    assert (r.spurious_excess == 0).all()
    np.testing.assert_array_equal(r.tables_true, r.tables_recorded)


def test_snapping_creates_excess():
    r = run(replicates=400)
    j = r.nurses.index("P")
    ex = r.spurious_excess[:, j]
    assert ex.mean() > 0 and sign_test(ex) < 1e-3
    assert set(np.flatnonzero(r.hist_recorded)) <= set(HANDOVERS.check_times)
    assert r.hist_true.sum() == r.hist_recorded.sum() == r.total_deaths.sum()


def test_recorded_table_looks_worse():
    r = run(replicates=200)
    better = 0
    for i in range(200):
        t, rec = attribution_table(r, "P", i)
        assert rec.a + rec.b == t.a + t.b
        better += fisher_exact(rec).p_value <= fisher_exact(t).p_value
    assert better / 200 > 0.9


def test_totals_conserved():
    snapped = run(replicates=100, seed=8)
    plain = run(RecordingRegime(snap_rule="none"), replicates=100, seed=8)
    np.testing.assert_array_equal(snapped.total_deaths, plain.total_deaths)
    for r in (snapped, plain):
        assert (r.true_counts <= r.total_deaths[:, None]).all()
        assert (r.recorded_counts <= r.total_deaths[:, None]).all()


def test_identical_rotas_symmetric():
    r = run(rota={"P": "day", "P2": "day", "Q": "night"}, replicates=100)
    np.testing.assert_array_equal(r.spurious_excess[:, 0], r.spurious_excess[:, 1])


def test_threads_do_not_matter():
    a, b = run(replicates=3000, threads=1), run(replicates=3000, threads=4)
    np.testing.assert_array_equal(a.tables_recorded, b.tables_recorded)
    np.testing.assert_array_equal(a.hist_true, b.hist_true)


def test_sparse_checks_warn():
    r = run(RecordingRegime((0,)), replicates=5)
    assert any("full day" in w for w in r.warnings)


def test_sign_test():
    assert sign_test(np.zeros(5)) == 1.0
    assert sign_test(np.array([1, 1, 1])) == pytest.approx(0.125)
    assert sign_test(np.array([1, -1, 0])) == pytest.approx(0.75)


def test_inconsistent_window_rejected():
    shifts, _ = ward(days=1)
    bad = [ClockWindow("P", shifts[0].id, shifts[0].start + 10, shifts[0].end)]
    with pytest.raises(ValueError):
        simulate_ward_deaths(1.0, 1, HANDOVERS, shifts, bad, 0, 1)
