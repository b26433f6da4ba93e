"""Roster charts: events (rows) by nurses (columns), plus shift schedules."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class ChartError(ValueError):
    """Base class for chart ingestion and lookup failures."""


class ParseError(ChartError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ReferentialError(ChartError):
    pass


class UniquenessError(ChartError):
    pass


class LookupFailure(ChartError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class EmploymentClass(str, enum.Enum):
    FULL_TIME = "full_time"
    PART_TIME = "part_time"
    BANK = "bank"
    AGENCY = "agency"


class EventKind(str, enum.Enum):
    DEATH = "death"
    COLLAPSE = "collapse"
    OTHER = "other"


@dataclass(frozen=True)
class Nurse:
    id: str
    employment_class: EmploymentClass = EmploymentClass.FULL_TIME
    qualification_tier: int = 0

    def __post_init__(self):
        if self.qualification_tier < 0:
            raise ValueError(f"nurse {self.id}: qualification_tier must be >= 0")
        object.__setattr__(self, "employment_class", EmploymentClass(self.employment_class))


@dataclass(frozen=True)
class Shift:
    id: str
    start: int
    end: int
    on_duty: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"shift {self.id}: start must precede end")
        object.__setattr__(self, "on_duty", frozenset(self.on_duty))

    def contains(self, t: int) -> bool:
        return self.start <= t <= self.end


@dataclass(frozen=True)
class Schedule:
    """Ordered shifts of one ward."""

    shifts: tuple[Shift, ...]

    def __post_init__(self):
        object.__setattr__(self, "shifts", tuple(self.shifts))
        ids = [s.id for s in self.shifts]
        if len(set(ids)) != len(ids):
            raise UniquenessError("duplicate shift id in schedule")
        ordered = sorted(self.shifts, key=lambda s: (s.start, s.end))
        for prev, nxt in zip(ordered, ordered[1:]):
            if nxt.start < prev.end:
                raise ValueError(
                    f"shifts {prev.id} and {nxt.id} overlap beyond a handover boundary")

    @property
    def nurse_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for s in self.shifts:
            for n in sorted(s.on_duty):
                seen.setdefault(n, None)
        return list(seen)

    def by_id(self, shift_id: str) -> Shift:
        for s in self.shifts:
            if s.id == shift_id:
                return s
        raise LookupFailure(f"unknown shift id {shift_id!r}")

    def shift_at(self, t: int) -> Shift:
        """Shift covering minute ``t``; at a handover the incoming shift wins."""
        hit = None
        for s in self.shifts:
            if s.start <= t < s.end:
                return s
            if t == s.end and hit is None:
                hit = s
        if hit is None:
            raise LookupFailure(f"no shift covers timestamp {t}")
        return hit

    def exposure(self, nurse_id: str) -> int:
        return sum(nurse_id in s.on_duty for s in self.shifts)

    @property
    def window(self) -> tuple[int, int]:
        return (min(s.start for s in self.shifts), max(s.end for s in self.shifts))


@dataclass(frozen=True)
class EventRecord:
    id: str
    kind: EventKind
    occurred_at: int
    shift_id: str | None = None
    flagged_suspicious: bool = True
    present: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        object.__setattr__(self, "present", frozenset(self.present))


@dataclass(frozen=True)
class RosterChart:
    nurses: tuple[Nurse, ...]
    events: tuple[EventRecord, ...]
    shift_exposure: tuple[int, ...] = ()
    provenance: tuple[str, ...] = ()
    presence: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nurses", tuple(self.nurses))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        ids = [n.id for n in self.nurses]
        if len(set(ids)) != len(ids):
            raise UniquenessError("duplicate nurse id in chart")
        eids = [e.id for e in self.events]
        if len(set(eids)) != len(eids):
            dup = next(e for e in eids if eids.count(e) > 1)
            raise UniquenessError(f"duplicate event id {dup!r}")
        col = {n: j for j, n in enumerate(ids)}
        mat = np.zeros((len(self.events), len(ids)), dtype=bool)
        for i, e in enumerate(self.events):
            for n in e.present:
                if n not in col:
                    raise ReferentialError(f"event {e.id!r} lists unknown nurse {n!r}")
                mat[i, col[n]] = True
        mat.setflags(write=False)
        object.__setattr__(self, "presence", mat)
        exposure = tuple(self.shift_exposure) or (0,) * len(ids)
        if len(exposure) != len(ids):
            raise ValueError("shift_exposure length must match the nurse list")
        object.__setattr__(self, "shift_exposure", exposure)

    @property
    def nurse_ids(self) -> list[str]:
        return [n.id for n in self.nurses]

    def nurse(self, nurse_id: str) -> Nurse:
        for n in self.nurses:
            if n.id == nurse_id:
                return n
        raise LookupFailure(f"unknown nurse id {nurse_id!r}")

    def event(self, event_id: str) -> EventRecord:
        for e in self.events:
            if e.id == event_id:
                return e
        raise LookupFailure(f"unknown event id {event_id!r}")


def presence_counts(chart: RosterChart) -> dict[str, int]:
    """Number of charted events at which each nurse was present, in column order."""
    totals = chart.presence.sum(axis=0)
    return {n.id: int(c) for n, c in zip(chart.nurses, totals)}


def remove_event(chart: RosterChart, event_id: str, reason: str = "") -> RosterChart:
    chart.event(event_id)
    kept = tuple(e for e in chart.events if e.id != event_id)
    note = f"removed event {event_id}" + (f": {reason}" if reason else "")
    return replace(chart, events=kept, provenance=chart.provenance + (note,))


def validate_against_schedule(chart: RosterChart, schedule: Schedule) -> RosterChart:
    """Resolve each event to its shift and check ``present`` against the rota.

    Returns a chart whose events carry shift ids and whose exposure counts come
    from the schedule.
    """
    known = set(schedule.nurse_ids)
    events = []
    for e in chart.events:
        shift = schedule.by_id(e.shift_id) if e.shift_id else schedule.shift_at(e.occurred_at)
        if not shift.contains(e.occurred_at):
            raise ReferentialError(
                f"event {e.id!r} at {e.occurred_at} lies outside shift {shift.id!r}")
        extra = sorted(e.present - shift.on_duty)
        if extra:
            missing = [n for n in extra if n not in known]
            what = "unknown nurse" if missing else "nurse not on shift"
            raise ReferentialError(
                f"event {e.id!r}: {what} {', '.join(extra)} (shift {shift.id!r})")
        events.append(replace(e, shift_id=shift.id))
    exposure = tuple(schedule.exposure(n.id) for n in chart.nurses)
    return replace(chart, events=tuple(events), shift_exposure=exposure)


# ---------------------------------------------------------------- file formats

WIDE_CSV = "wide_csv"
EVENT_LIST_CSV = "event_list_csv"
_FIXED = ("event_id", "kind", "timestamp")


def _rows(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, next(csv.reader([line]))


def _int(cell: str, lineno: int, what: str) -> int:
    try:
        return int(cell.strip())
    except ValueError:
        raise ParseError(f"{what} must be integer minutes, got {cell!r}", lineno) from None


def _kind(cell: str, lineno: int) -> EventKind:
    try:
        return EventKind(cell.strip())
    except ValueError:
        raise ParseError(f"unknown event kind {cell!r}", lineno) from None


def _mark(cell: str, lineno: int) -> bool:
    c = cell.strip().lower()
    if c in ("1", "x"):
        return True
    if c in ("0", ""):
        return False
    raise ParseError(f"presence cell must be 1/0/x/blank, got {cell!r}", lineno)


def _parse_wide(text: str) -> RosterChart:
    rows = iter(_rows(text))
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ParseError("missing header row") from None
    header = [h.strip() for h in header]
    if tuple(header[:3]) != _FIXED:
        raise ParseError("header must start with event_id,kind,timestamp", lineno)
    nurse_ids = header[3:]
    events, seen = [], set()
    for lineno, row in rows:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        eid = row[0].strip()
        if eid in seen:
            raise UniquenessError(f"duplicate event id {eid!r} (line {lineno})")
        seen.add(eid)
        present = {n for n, cell in zip(nurse_ids, row[3:]) if _mark(cell, lineno)}
        events.append(EventRecord(eid, _kind(row[1], lineno), _int(row[2], lineno, "timestamp"),
                                  present=frozenset(present)))
    return RosterChart(nurses=tuple(Nurse(n) for n in nurse_ids), events=tuple(events))


def _parse_event_list(text: str, schedule: Schedule | None) -> RosterChart:
    order: dict[str, None] = {}
    rows: dict[str, dict] = {}
    header_seen = False
    known = set(schedule.nurse_ids) if schedule is not None else None
    for lineno, row in _rows(text):
        if not header_seen and [c.strip() for c in row[:4]] == ["event_id", "kind", "timestamp", "shift_id"]:
            header_seen = True
            continue
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, got {len(row)}", lineno)
        eid, kind, ts, sid, nid = (c.strip() for c in row)
        rec = rows.get(eid)
        if rec is None:
            rec = rows[eid] = dict(kind=_kind(kind, lineno), ts=_int(ts, lineno, "timestamp"),
                                   shift=sid or None, present=set(), empty=False)
        elif rec["kind"] != _kind(kind, lineno) or rec["ts"] != _int(ts, lineno, "timestamp") \
                or rec["shift"] != (sid or None):
            raise UniquenessError(f"duplicate event id {eid!r} with conflicting fields (line {lineno})")
        if nid:
            if known is not None and nid not in known:
                raise ReferentialError(f"event {eid!r}: unknown nurse {nid!r} (line {lineno})")
            if nid in rec["present"]:
                raise UniquenessError(f"event {eid!r} lists nurse {nid!r} twice (line {lineno})")
            rec["present"].add(nid)
            order.setdefault(nid, None)
        else:
            if rec["empty"] or rec["present"]:
                raise UniquenessError(f"duplicate event id {eid!r} (line {lineno})")
            rec["empty"] = True
        if rec["empty"] and rec["present"]:
            raise ParseError(f"event {eid!r} has both an empty and a named nurse row", lineno)
    if schedule is not None:
        for n in schedule.nurse_ids:
            order.setdefault(n, None)
    events = tuple(EventRecord(eid, r["kind"], r["ts"], r["shift"], present=frozenset(r["present"]))
                   for eid, r in rows.items())
    return RosterChart(nurses=tuple(Nurse(n) for n in order), events=events)


def load_schedule(path: str | Path) -> Schedule:
    """Read ``shift_id,start,end,nurse_id`` rows (one per assignment)."""
    text = Path(path).read_text(encoding="utf-8")
    spans: dict[str, tuple[int, int]] = {}
    duty: dict[str, set[str]] = {}
    for lineno, row in _rows(text):
        if [c.strip() for c in row] == ["shift_id", "start", "end", "nurse_id"]:
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", lineno)
        sid, start, end, nid = (c.strip() for c in row)
        span = (_int(start, lineno, "start"), _int(end, lineno, "end"))
        if spans.setdefault(sid, span) != span:
            raise ParseError(f"shift {sid!r} redefined with different times", lineno)
        duty.setdefault(sid, set())
        if nid:
            duty[sid].add(nid)
    return Schedule(tuple(Shift(sid, *spans[sid], frozenset(duty[sid])) for sid in spans))


def load_chart(path: str | Path, format: str = WIDE_CSV, schedule: Schedule | None = None,
               nurses: Sequence[Nurse] | None = None) -> RosterChart:
    """Read a chart file; with ``schedule`` events are checked against the rota.

    ``nurses`` optionally supplies employment class and qualification metadata
    for ids that appear in the file.
    """
    text = Path(path).read_text(encoding="utf-8")
    if format == WIDE_CSV:
        chart = _parse_wide(text)
    elif format == EVENT_LIST_CSV:
        chart = _parse_event_list(text, schedule)
    else:
        raise ValueError(f"unknown chart format {format!r}")
    if nurses:
        meta: Mapping[str, Nurse] = {n.id: n for n in nurses}
        chart = replace(chart, nurses=tuple(meta.get(n.id, n) for n in chart.nurses))
    if schedule is not None:
        chart = validate_against_schedule(chart, schedule)
    return chart


def dumps_chart(chart: RosterChart, format: str = WIDE_CSV) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if format == WIDE_CSV:
        w.writerow(list(_FIXED) + chart.nurse_ids)
        for e, row in zip(chart.events, chart.presence):
            w.writerow([e.id, e.kind.value, e.occurred_at] + [int(v) for v in row])
    elif format == EVENT_LIST_CSV:
        w.writerow(["event_id", "kind", "timestamp", "shift_id", "nurse_id"])
        for e, row in zip(chart.events, chart.presence):
            ids = [n for n, v in zip(chart.nurse_ids, row) if v] or [""]
            for n in ids:
                w.writerow([e.id, e.kind.value, e.occurred_at, e.shift_id or "", n])
    else:
        raise ValueError(f"unknown chart format {format!r}")
    return buf.getvalue()


def save_chart(chart: RosterChart, path: str | Path, format: str = WIDE_CSV) -> None:
    Path(path).write_text(dumps_chart(chart, format), encoding="utf-8")


def dumps_schedule(schedule: Schedule) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["shift_id", "start", "end", "nurse_id"])
    for s in schedule.shifts:
        for n in sorted(s.on_duty) or [""]:
            w.writerow([s.id, s.start, s.end, n])
    return buf.getvalue()
