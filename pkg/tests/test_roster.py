import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roster_forensics.roster import (EventKind, EventRecord, LookupFailure, Nurse, ParseError,
                                     ReferentialError, RosterChart, Schedule, Shift, UniquenessError,
                                     dumps_chart, load_chart, load_schedule, presence_counts,
                                     remove_event, save_chart)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_wide_csv_transcribes_marks(fixtures):
    chart = load_chart(fixtures("tiny.csv"))
    assert chart.nurse_ids == ["A", "B", "C"]
    assert chart.presence.astype(int).tolist() == [[1, 1, 0], [1, 0, 0]]


def test_event_list_matches_wide(fixtures, tiny_schedule):
    a = load_chart(fixtures("tiny.csv"), "wide_csv", tiny_schedule)
    b = load_chart(fixtures("tiny_events.csv"), "event_list_csv", tiny_schedule)
    assert a.nurse_ids == b.nurse_ids
    np.testing.assert_array_equal(a.presence, b.presence)
    assert [e.shift_id for e in a.events] == ["s01", "s03"]


def test_schedule_fixes_exposure(tiny_chart):
    assert tiny_chart.shift_exposure == (3, 8, 8)


def test_empty_event_section_is_valid(tmp_path):
    chart = load_chart(write(tmp_path, "c.csv", "event_id,kind,timestamp,A,B\n# nothing yet\n"))
    assert chart.events == ()
    assert chart.presence.shape == (0, 2)
    assert presence_counts(chart) == {"A": 0, "B": 0}


def test_nurse_not_on_shift_names_event(fixtures, tiny_schedule):
    with pytest.raises(ReferentialError, match="e2"):
        load_chart(fixtures("bad_presence.csv"), "event_list_csv", tiny_schedule)


def test_unknown_nurse_is_referential_error(tmp_path, tiny_schedule):
    p = write(tmp_path, "e.csv", "event_id,kind,timestamp,shift_id,nurse_id\ne1,death,100,s01,Z\n")
    with pytest.raises(ReferentialError, match="Z"):
        load_chart(p, "event_list_csv", tiny_schedule)


def test_wrong_arity_reports_line(tmp_path):
    p = write(tmp_path, "c.csv", "event_id,kind,timestamp,A,B\ne1,death,10,1,0\ne2,death,20,1\n")
    with pytest.raises(ParseError) as err:
        load_chart(p)
    assert err.value.line == 3


def test_duplicate_event_id(tmp_path):
    p = write(tmp_path, "c.csv", "event_id,kind,timestamp,A\ne1,death,10,1\ne1,death,20,0\n")
    with pytest.raises(UniquenessError, match="e1"):
        load_chart(p)


def test_bad_presence_cell(tmp_path):
    p = write(tmp_path, "c.csv", "event_id,kind,timestamp,A\ne1,death,10,yes\n")
    with pytest.raises(ParseError):
        load_chart(p)


def test_column_order_is_kept(tmp_path):
    p = write(tmp_path, "c.csv", "event_id,kind,timestamp,Zoe,Amy,Kim\ne1,death,5,0,1,0\n")
    assert load_chart(p).nurse_ids == ["Zoe", "Amy", "Kim"]


def test_event_with_nobody_present_is_legal(tmp_path):
    p = write(tmp_path, "e.csv", "event_id,kind,timestamp,shift_id,nurse_id\n"
                                 "e1,death,100,s01,A\ne2,collapse,800,s02,\n")
    chart = load_chart(p, "event_list_csv")
    assert chart.presence.astype(int).tolist() == [[1], [0]]


@pytest.mark.parametrize("matrix,expected", [
    ([[1, 1, 0], [1, 0, 0]], [2, 1, 0]),
    ([[1, 1]] * 4, [4, 4]),
    ([], [0, 0, 0]),
])
def test_presence_counts(matrix, expected):
    chart = chart_from_matrix(np.array(matrix, dtype=bool).reshape(len(matrix), len(expected)))
    assert list(presence_counts(chart).values()) == expected


def test_remove_event(tiny_chart):
    smaller = remove_event(tiny_chart, "e2", "nurse was not present")
    assert list(presence_counts(smaller).values()) == [1, 1, 0]
    assert len(tiny_chart.events) == 2
    assert "e2" in smaller.provenance[-1] and "not present" in smaller.provenance[-1]
    with pytest.raises(LookupFailure):
        remove_event(smaller, "e2")
    empty = remove_event(smaller, "e1")
    assert empty.events == () and list(presence_counts(empty).values()) == [0, 0, 0]


def test_shift_invariants():
    with pytest.raises(ValueError):
        Shift("s", 10, 10)
    with pytest.raises(ValueError, match="overlap"):
        Schedule((Shift("a", 0, 100), Shift("b", 50, 150)))
    # touching at the handover is fine
    Schedule((Shift("a", 0, 100), Shift("b", 100, 200)))


def test_nurse_tier_non_negative():
    with pytest.raises(ValueError):
        Nurse("A", "full_time", -1)


def test_schedule_roundtrip(fixtures, tmp_path):
    from roster_forensics.roster import dumps_schedule
    s = load_schedule(fixtures("shifts.csv"))
    p = write(tmp_path, "s.csv", dumps_schedule(s))
    assert load_schedule(p) == s


# ---------------------------------------------------------------- properties

def chart_from_matrix(m: np.ndarray, names=None) -> RosterChart:
    names = names or [f"n{j}" for j in range(m.shape[1])]
    events = tuple(EventRecord(f"e{i}", EventKind.DEATH, 10 * i,
                               present=frozenset(n for n, v in zip(names, row) if v))
                   for i, row in enumerate(m))
    return RosterChart(tuple(Nurse(n) for n in names), events)


matrices = st.integers(0, 6).flatmap(
    lambda r: st.integers(1, 5).flatmap(
        lambda c: st.lists(st.lists(st.booleans(), min_size=c, max_size=c), min_size=r, max_size=r)
        .map(lambda rows, c=c: np.array(rows, dtype=bool).reshape(len(rows), c))))


@given(matrices, st.sampled_from(["wide_csv", "event_list_csv"]))
@settings(max_examples=60, deadline=None)
def test_save_load_roundtrip(tmp_path_factory, m, fmt):
    chart = chart_from_matrix(m)
    path = tmp_path_factory.mktemp("rt") / "c.csv"
    save_chart(chart, path, fmt)
    again = load_chart(path, fmt)
    if fmt == "event_list_csv":
        # nurses never present have no row in the long format
        cols = [chart.nurse_ids.index(n) for n in again.nurse_ids]
        np.testing.assert_array_equal(again.presence, m[:, cols])
        assert m[:, [j for j in range(m.shape[1]) if j not in cols]].sum() == 0
    else:
        np.testing.assert_array_equal(again.presence, m)
        assert dumps_chart(again) == dumps_chart(chart)


@given(matrices, st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_counts_permutation_equivariant(m, rnd):
    perm = list(range(m.shape[1]))
    rnd.shuffle(perm)
    base = list(presence_counts(chart_from_matrix(m)).values())
    permuted = list(presence_counts(chart_from_matrix(m[:, perm])).values())
    assert permuted == [base[j] for j in perm]


@given(matrices.filter(lambda m: m.shape[0] > 0), st.data())
@settings(max_examples=60, deadline=None)
def test_remove_decrements_by_presence(m, data):
    chart = chart_from_matrix(m)
    i = data.draw(st.integers(0, m.shape[0] - 1))
    before = np.array(list(presence_counts(chart).values()))
    after = np.array(list(presence_counts(remove_event(chart, f"e{i}")).values()))
    np.testing.assert_array_equal(before - after, m[i].astype(int))
