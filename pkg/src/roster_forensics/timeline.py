"""Death times recorded at the next handover or midnight check.

Deaths happen in continuous time; the certificate carries the time of the next
scheduled round. A nurse whose clock window straddles the handovers collects
deaths she never witnessed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .association import Assoc2x2
from .roster import Shift

DAY = 1440


class SnapRule(str, enum.Enum):
    NEXT_CHECK = "next_check"
    NONE = "none"


@dataclass(frozen=True)
class RecordingRegime:
    """Check instants in minutes after midnight; midnight itself is minute 0."""

    check_times: tuple[int, ...] = (0, 420, 1140)
    snap_rule: SnapRule = SnapRule.NEXT_CHECK

    def __post_init__(self):
        object.__setattr__(self, "snap_rule", SnapRule(self.snap_rule))
        ct = tuple(int(t) for t in self.check_times)
        if any(b <= a for a, b in zip(ct, ct[1:])):
            raise ValueError("check times must be strictly increasing within the day")
        if any(not 0 <= t < DAY for t in ct):
            raise ValueError("check times must lie in [0, 1440)")
        if self.snap_rule is SnapRule.NEXT_CHECK and not ct:
            raise ValueError("snapping needs at least one check time")
        object.__setattr__(self, "check_times", ct)

    @classmethod
    def handovers(cls, times: Sequence[int], midnight: bool = True,
                  snap_rule: SnapRule | str = SnapRule.NEXT_CHECK) -> "RecordingRegime":
        ct = set(int(t) % DAY for t in times)
        if midnight:
            ct.add(0)
        return cls(tuple(sorted(ct)), snap_rule)

    @property
    def max_gap(self) -> int:
        ct = self.check_times
        if len(ct) == 1:
            return DAY
        return max(max(b - a for a, b in zip(ct, ct[1:])), ct[0] + DAY - ct[-1])

    def record(self, t: np.ndarray) -> np.ndarray:
        """Recorded timestamps for true times ``t`` (minutes, float)."""
        t = np.asarray(t, dtype=float)
        if self.snap_rule is SnapRule.NONE:
            return t.copy()
        day = np.floor(t / DAY)
        tod = t - day * DAY
        # checks of today followed by the first check of tomorrow
        ext = np.array(self.check_times + (self.check_times[0] + DAY,), dtype=float)
        idx = np.searchsorted(ext, tod, side="left")
        return day * DAY + ext[idx]


@dataclass(frozen=True)
class ClockWindow:
    nurse_id: str
    shift_id: str
    clock_in: float
    clock_out: float


def clock_windows(shifts: Sequence[Shift], lead: float = 30, lag: float = 30) -> list[ClockWindow]:
    """Windows opening ``lead`` minutes before and closing ``lag`` after each worked shift.

    The 30-minute defaults are an assumption, not a measured value.
    """
    if lead < 0 or lag < 0:
        raise ValueError("lead and lag must be non-negative")
    return [ClockWindow(n, s.id, s.start - lead, s.end + lag)
            for s in shifts for n in sorted(s.on_duty)]


def day_night_rota(days: int, rota: dict[str, str], day_start: int = 420,
                   day_length: int = 720) -> list[Shift]:
    """Day shift from ``day_start`` for ``day_length`` minutes, night shift for the rest.

    ``rota`` maps nurse -> "day", "night" or "both".
    """
    if not 0 < day_length < DAY:
        raise ValueError("day_length must lie strictly between 0 and 1440")
    shifts = []
    for k in range(days):
        start = k * DAY + day_start
        for label, lo, hi in (("day", start, start + day_length), ("night", start + day_length, start + DAY)):
            on = frozenset(n for n, which in rota.items() if which in (label, "both"))
            shifts.append(Shift(f"d{k:03d}{label[0]}", lo, hi, on))
    return shifts


def _attributed(times: np.ndarray, spans: np.ndarray) -> np.ndarray:
    """Boolean (deaths,) mask: time falls in any closed span."""
    if len(spans) == 0 or len(times) == 0:
        return np.zeros(len(times), dtype=bool)
    inside = (times[:, None] >= spans[None, :, 0]) & (times[:, None] <= spans[None, :, 1])
    return inside.any(axis=1)


def _per_window(times: np.ndarray, spans: np.ndarray) -> np.ndarray:
    if len(spans) == 0:
        return np.zeros(0, dtype=np.int64)
    if len(times) == 0:
        return np.zeros(len(spans), dtype=np.int64)
    inside = (times[:, None] >= spans[None, :, 0]) & (times[:, None] <= spans[None, :, 1])
    return inside.sum(axis=0)


def _shift_index(times: np.ndarray, shifts: Sequence[Shift]) -> np.ndarray:
    starts = np.array([s.start for s in shifts], dtype=float)
    ends = np.array([s.end for s in shifts], dtype=float)
    i = np.searchsorted(starts, times, side="right") - 1
    ok = (i >= 0) & (times < ends[np.clip(i, 0, len(ends) - 1)])
    return np.where(ok, i, -1)


@dataclass(frozen=True, eq=False)
class ArtifactReport:
    nurses: tuple[str, ...]
    regime: RecordingRegime
    rate: float
    days: int
    seed: int
    replicates: int
    total_deaths: np.ndarray = field(repr=False)
    true_counts: np.ndarray = field(repr=False)
    recorded_counts: np.ndarray = field(repr=False)
    tables_true: np.ndarray = field(repr=False)
    tables_recorded: np.ndarray = field(repr=False)
    hist_true: np.ndarray = field(repr=False)
    hist_recorded: np.ndarray = field(repr=False)
    bin_minutes: int = 1
    warnings: tuple[str, ...] = ()
    window_nurses: frozenset[str] = frozenset()

    @property
    def spurious_excess(self) -> np.ndarray:
        """(replicates, nurses) recorded minus true attributions."""
        return self.recorded_counts - self.true_counts

    def summary(self) -> dict:
        r = self.replicates
        ex = self.spurious_excess
        per = {}
        for j, n in enumerate(self.nurses):
            per[n] = {
                "true_attributions_mean": float(self.true_counts[:, j].mean()) if r else 0.0,
                "recorded_attributions_mean": float(self.recorded_counts[:, j].mean()) if r else 0.0,
                "spurious_excess_mean": float(ex[:, j].mean()) if r else 0.0,
                "spurious_excess_mc_se": float(ex[:, j].std(ddof=1) / math.sqrt(r)) if r > 1 else 0.0,
                "sign_test_p": sign_test(ex[:, j]),
            }
        return {
            "rate_per_day": self.rate,
            "days": self.days,
            "replicates": r,
            "check_times": list(self.regime.check_times),
            "snap_rule": self.regime.snap_rule.value,
            "mean_total_deaths": float(self.total_deaths.mean()) if r else 0.0,
            "per_nurse": per,
        }

    def histogram_rows(self) -> list[tuple[int, int, int]]:
        return [(k * self.bin_minutes, int(t), int(c))
                for k, (t, c) in enumerate(zip(self.hist_true, self.hist_recorded))]


def sign_test(diffs: np.ndarray) -> float:
    """One-sided exact sign test that positive differences dominate; ties dropped."""
    pos = int((diffs > 0).sum())
    n = pos + int((diffs < 0).sum())
    if n == 0:
        return 1.0
    # P(Binomial(n, 1/2) >= pos)
    logs = [math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) - n * math.log(2)
            for k in range(pos, n + 1)]
    top = max(logs)
    return min(1.0, math.exp(top) * math.fsum(math.exp(v - top) for v in logs))


def simulate_ward_deaths(rate: float, days: int, regime: RecordingRegime, shifts: Sequence[Shift],
                         windows: Sequence[ClockWindow], seed: int, replicates: int,
                         nurses: Sequence[str] | None = None, bin_minutes: int = 1,
                         threads: int = 1) -> ArtifactReport:
    """Poisson deaths over ``days``; attribution by true and by recorded time.

    A death is attributed to a nurse when the timestamp lies inside one of her
    clock windows. ``shifts`` define the exposure units for the 2x2 tables.
    """
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if days < 1 or replicates < 1:
        raise ValueError("days and replicates must be >= 1")
    if DAY % bin_minutes:
        raise ValueError("bin_minutes must divide 1440")
    shifts = sorted(shifts, key=lambda s: s.start)
    known = {s.id: s for s in shifts}
    for w in windows:
        s = known.get(w.shift_id)
        if s is None:
            raise ValueError(f"window of {w.nurse_id} references unknown shift {w.shift_id}")
        if w.nurse_id not in s.on_duty or w.clock_in > s.start or w.clock_out < s.end:
            raise ValueError(f"window of {w.nurse_id} on {w.shift_id} inconsistent with the shift")
    names = tuple(nurses) if nurses is not None else tuple(dict.fromkeys(
        [n for s in shifts for n in sorted(s.on_duty)] + [w.nurse_id for w in windows]))
    warnings = []
    if regime.snap_rule is SnapRule.NEXT_CHECK and regime.max_gap >= DAY:
        warnings.append("check spacing reaches a full day: deaths may snap across shifts")
    spans = {n: np.array([(w.clock_in, w.clock_out) for w in windows if w.nurse_id == n], float).reshape(-1, 2)
             for n in names}
    owned = {n: np.array([s.id in {w.shift_id for w in windows if w.nurse_id == n} for s in shifts])
             for n in names}
    nbins = DAY // bin_minutes
    horizon = days * DAY

    def one(g: np.random.Generator):
        k = g.poisson(rate * days) if rate > 0 else 0
        true_t = np.sort(g.random(k) * horizon)
        rec_t = regime.record(true_t)
        si_true, si_rec = _shift_index(true_t, shifts), _shift_index(rec_t, shifts)
        busy_true = np.zeros(len(shifts), bool)
        busy_rec = np.zeros(len(shifts), bool)
        busy_true[si_true[si_true >= 0]] = True
        busy_rec[si_rec[si_rec >= 0]] = True
        tc, rc, tt, tr = [], [], [], []
        for n in names:
            wins = spans[n]
            mt, mr = _attributed(true_t, wins), _attributed(rec_t, wins)
            tc.append(int(mt.sum()))
            rc.append(int(mr.sum()))
            # c counts the nurse's windows with nothing attributed; d the other quiet shifts
            tt.append(_cells(mt, _per_window(true_t, wins), owned[n], busy_true))
            tr.append(_cells(mr, _per_window(rec_t, wins), owned[n], busy_rec))
        ht = np.bincount(((true_t % DAY) // bin_minutes).astype(np.int64), minlength=nbins)[:nbins]
        hr = np.bincount(((rec_t % DAY) // bin_minutes).astype(np.int64), minlength=nbins)[:nbins]
        return k, tc, rc, tt, tr, ht, hr

    def run(block: int, start: int, size: int):
        g = rngmod.substream(seed, rngmod.STREAM_DEATHS, block)
        return [one(g) for _ in range(size)]

    rows = [r for part in rngmod.map_blocks(run, replicates, threads) for r in part]
    m = len(names)
    return ArtifactReport(
        names, regime, rate, days, seed, replicates,
        np.array([r[0] for r in rows], dtype=np.int64),
        np.array([r[1] for r in rows], dtype=np.int64).reshape(-1, m),
        np.array([r[2] for r in rows], dtype=np.int64).reshape(-1, m),
        np.array([r[3] for r in rows], dtype=np.int64).reshape(-1, m, 4),
        np.array([r[4] for r in rows], dtype=np.int64).reshape(-1, m, 4),
        np.sum([r[5] for r in rows], axis=0).astype(np.int64),
        np.sum([r[6] for r in rows], axis=0).astype(np.int64),
        bin_minutes, tuple(warnings), frozenset(w.nurse_id for w in windows),
    )


def attribute_deaths(true_times: Sequence[float], regime: RecordingRegime,
                     windows: Sequence[ClockWindow]) -> dict[str, tuple[int, int]]:
    """Per nurse: (deaths in her windows by true time, by recorded time)."""
    t = np.asarray(true_times, dtype=float)
    rec = regime.record(t)
    out = {}
    for n in dict.fromkeys(w.nurse_id for w in windows):
        wins = np.array([(w.clock_in, w.clock_out) for w in windows if w.nurse_id == n], float)
        out[n] = (int(_attributed(t, wins).sum()), int(_attributed(rec, wins).sum()))
    return out


def _cells(mask: np.ndarray, per_window: np.ndarray, owned: np.ndarray, busy: np.ndarray) -> list[int]:
    a = int(mask.sum())
    b = int(len(mask) - a)
    c = int((per_window == 0).sum())
    d = int((~owned & ~busy).sum())
    return [a, b, c, d]


def attribution_table(report: ArtifactReport, nurse_id: str, replicate: int = 0) -> tuple[Assoc2x2, Assoc2x2]:
    """(true-time table, recorded-time table) for one nurse in one replicate."""
    j = report.nurses.index(nurse_id)
    return (Assoc2x2(*report.tables_true[replicate, j].tolist()),
            Assoc2x2(*report.tables_recorded[replicate, j].tolist()))
