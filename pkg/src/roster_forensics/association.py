"""Exact 2x2 association tests and p-value combination."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Sequence

from .roster import LookupFailure, RosterChart, Schedule


class Sided(str, enum.Enum):
    ONE = "fisher_exact_one_sided"
    TWO = "fisher_exact_two_sided"


@dataclass(frozen=True)
class Assoc2x2:
    """Events and event-free shifts split by a nurse's presence.

    a: events with the nurse present, b: events without her,
    c: her event-free shifts, d: other event-free shifts.
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in "abcd":
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"cell {name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    @property
    def degenerate(self) -> bool:
        """Any zero margin makes the conditional test uninformative."""
        return 0 in (self.a + self.b, self.c + self.d, self.a + self.c, self.b + self.d)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    p_value: float
    effect_size_raw: float
    effect_size_corrected: float
    method: Sided
    degenerate: bool = False
    table: Assoc2x2 | None = None

    def to_dict(self) -> dict:
        raw = self.effect_size_raw
        if math.isnan(raw):
            raw_out = None
        elif math.isinf(raw):
            raw_out = "+inf"
        else:
            raw_out = raw
        out = {
            "p_value": self.p_value,
            "effect_size_raw": raw_out,
            "effect_size_corrected": self.effect_size_corrected,
            "method": self.method.value,
            "degenerate": self.degenerate,
        }
        if self.table is not None:
            out["table"] = self.table.to_dict()
        return out


def build_table(chart: RosterChart, nurse_id: str, schedule: Schedule) -> Assoc2x2:
    """Shift-level table for one nurse.

    Events are split by the chart's presence relation; event-free shifts by the
    rota. Several events in one shift each count once.
    """
    col = chart.nurse_ids.index(nurse_id) if nurse_id in chart.nurse_ids else None
    if col is None:
        raise LookupFailure(f"unknown nurse id {nurse_id!r}")
    lo, hi = schedule.window
    busy: set[str] = set()
    for e in chart.events:
        if not lo <= e.occurred_at <= hi:
            raise ValueError(f"event {e.id!r} at {e.occurred_at} outside schedule window [{lo}, {hi}]")
        sid = e.shift_id if e.shift_id is not None else schedule.shift_at(e.occurred_at).id
        schedule.by_id(sid)
        busy.add(sid)
    present = chart.presence[:, col] if chart.events else ()
    a = int(sum(present))
    b = len(chart.events) - a
    c = d = 0
    for s in schedule.shifts:
        if s.id in busy:
            continue
        if nurse_id in s.on_duty:
            c += 1
        else:
            d += 1
    return Assoc2x2(a, b, c, d)


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def hypergeom_logpmf(x: int, total: int, successes: int, draws: int) -> float:
    return (_log_comb(successes, x) + _log_comb(total - successes, draws - x)
            - _log_comb(total, draws))


def relative_risk(t: Assoc2x2) -> tuple[float, float]:
    """Raw and Haldane-Anscombe corrected risk ratio (event rate present / absent).

    The raw ratio is +inf when only the absent-arm numerator vanishes and NaN
    when either arm has no exposure.
    """
    a, b, c, d = t.a, t.b, t.c, t.d
    if a + c == 0 or b + d == 0 or (a == 0 and b == 0):
        raw = math.nan
    elif b == 0:
        raw = math.inf
    else:
        raw = (a / (a + c)) / (b / (b + d))
    corrected = ((a + 0.5) / (a + c + 1.0)) / ((b + 0.5) / (b + d + 1.0))
    return raw, corrected


def fisher_exact(table: Assoc2x2, sided: Sided | str = Sided.ONE) -> TestResult:
    """Conditional exact test of excess events in the nurse's shifts.

    One-sided: P(X >= a) for X hypergeometric with population a+b+c+d,
    a+c successes and a+b draws. Two-sided: total mass of outcomes no more
    probable than the observed one.
    """
    sided = Sided(sided)
    raw, corr = relative_risk(table)
    if table.degenerate:
        return TestResult(1.0, raw, corr, sided, True, table)
    p = _fisher_p(table.a, table.b, table.c, table.d, sided is Sided.ONE)
    return TestResult(p, raw, corr, sided, False, table)


@functools.lru_cache(maxsize=65536)
def _fisher_p(a: int, b: int, c: int, d: int, one_sided: bool) -> float:
    total, succ, draws = a + b + c + d, a + c, a + b
    lo, hi = max(0, draws - (total - succ)), min(draws, succ)
    if lo == hi:
        return 1.0
    logp = {x: hypergeom_logpmf(x, total, succ, draws) for x in range(lo, hi + 1)}
    peak = max(logp.values())
    if one_sided:
        tail = [v for x, v in logp.items() if x >= a]
    else:
        # relative tolerance guards ties lost to rounding
        cut = logp[a] + 1e-7
        tail = [v for v in logp.values() if v <= cut]
    norm = math.fsum(math.exp(v - peak) for v in logp.values())
    p = math.fsum(math.exp(v - peak) for v in tail) / norm
    return min(1.0, max(0.0, p))


def _check_ps(ps: Sequence[float]) -> list[float]:
    ps = [float(p) for p in ps]
    if not ps:
        raise ValueError("need at least one p-value")
    for p in ps:
        if not 0.0 < p <= 1.0:
            raise ValueError(f"p-values must lie in (0, 1], got {p}")
    return ps


def combine_pvalues_fisher(ps: Sequence[float]) -> float:
    """Fisher's method: -2 sum(log p) against chi-square with 2k df.

    The even-df upper tail has the closed form exp(-x/2) sum_{j<k} (x/2)^j / j!,
    summed here in log space.
    """
    ps = _check_ps(ps)
    half = -math.fsum(math.log(p) for p in ps)
    if half == 0.0:
        return 1.0
    log_terms = [j * math.log(half) - math.lgamma(j + 1) for j in range(len(ps))]
    top = max(log_terms)
    log_sf = -half + top + math.log(math.fsum(math.exp(t - top) for t in log_terms))
    return min(1.0, math.exp(log_sf))


@dataclass(frozen=True)
class NaiveProduct:
    value: float
    valid_combined: float
    invalid_as_p_value: bool = True

    @property
    def inflation(self) -> float:
        """How many times smaller the product is than the valid combined p."""
        return self.valid_combined / self.value

    def to_dict(self) -> dict:
        return {"value": self.value, "valid_combined_p": self.valid_combined,
                "inflation": self.inflation, "invalid_as_p_value": True}


def combine_pvalues_naive_product(ps: Sequence[float]) -> NaiveProduct:
    """Plain product of p-values. Not a p-value; kept to show the inflation."""
    ps = _check_ps(ps)
    prod = math.exp(math.fsum(math.log(p) for p in ps))
    return NaiveProduct(prod, combine_pvalues_fisher(ps))
