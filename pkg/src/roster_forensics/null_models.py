"""Null distributions of per-nurse event counts and of their maximum.

Events fall on shifts at random; a nurse experiences every event in a shift
she works. The quantity of interest is how the count of the nurse who happens
to top the chart compares with the count of one nurse named in advance.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import rng as rngmod
from .roster import RosterChart, Schedule, presence_counts

ENUMERATION_LIMIT = 10**6


class Assignment(str, enum.Enum):
    UNIFORM = "uniform_without_replacement"
    POISSON = "poisson_per_shift"


class Mode(str, enum.Enum):
    EXACT = "exact_enumeration"
    MONTE_CARLO = "monte_carlo"


class CapacityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WardScenario:
    n_shifts: int
    nurse_schedules: Mapping[str, frozenset[int]]
    n_events: int
    assignment: Assignment = Assignment.UNIFORM
    seed: int = 0
    target: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "assignment", Assignment(self.assignment))
        scheds = {str(k): frozenset(int(i) for i in v) for k, v in self.nurse_schedules.items()}
        object.__setattr__(self, "nurse_schedules", scheds)
        if self.n_shifts < 1:
            raise ValueError("n_shifts must be positive")
        if self.n_events < 0:
            raise ValueError("n_events must be non-negative")
        if not scheds:
            raise ValueError("scenario needs at least one nurse")
        for name, s in scheds.items():
            if not s:
                raise ValueError(f"nurse {name!r} has an empty schedule")
            if min(s) < 0 or max(s) >= self.n_shifts:
                raise ValueError(f"nurse {name!r} has shift indices outside [0, {self.n_shifts})")
        if self.target is None:
            object.__setattr__(self, "target", next(iter(scheds)))
        elif self.target not in scheds:
            raise ValueError(f"target {self.target!r} is not in the scenario")
        if self.assignment is Assignment.UNIFORM and self.n_events > self.n_shifts:
            raise ValueError(
                f"{self.n_events} events cannot occupy {self.n_shifts} shifts without replacement")

    @property
    def nurses(self) -> list[str]:
        return list(self.nurse_schedules)

    def duty_matrix(self) -> np.ndarray:
        """(n_shifts, n_nurses) 0/1 matrix."""
        m = np.zeros((self.n_shifts, len(self.nurse_schedules)), dtype=np.int64)
        for j, s in enumerate(self.nurse_schedules.values()):
            m[sorted(s), j] = 1
        return m

    def with_(self, **changes) -> "WardScenario":
        base = dict(n_shifts=self.n_shifts, nurse_schedules=self.nurse_schedules,
                    n_events=self.n_events, assignment=self.assignment, seed=self.seed,
                    target=self.target)
        base.update(changes)
        return WardScenario(**base)


def scenario_from_schedule(schedule: Schedule, n_events: int, nurses: Sequence[str] | None = None,
                           **kwargs) -> WardScenario:
    ids = list(nurses) if nurses is not None else schedule.nurse_ids
    scheds = {}
    for n in ids:
        idx = frozenset(i for i, s in enumerate(schedule.shifts) if n in s.on_duty)
        if idx:
            scheds[n] = idx
    return WardScenario(len(schedule.shifts), scheds, n_events, **kwargs)


def place_events(scenario: WardScenario, gen: np.random.Generator, size: int) -> np.ndarray:
    """Events per shift for ``size`` replicates, shape (size, n_shifts)."""
    n, k = scenario.n_shifts, scenario.n_events
    if scenario.assignment is Assignment.POISSON:
        return gen.poisson(k / n, size=(size, n)).astype(np.int64)
    out = np.zeros((size, n), dtype=np.int64)
    if k == 0:
        return out
    keys = gen.random((size, n))
    if k < n:
        chosen = np.argpartition(keys, k - 1, axis=1)[:, :k]
    else:
        chosen = np.broadcast_to(np.arange(n), (size, n))
    np.put_along_axis(out, chosen, 1, axis=1)
    return out


def event_block(scenario: WardScenario, block: int, size: int) -> np.ndarray:
    return place_events(scenario, rngmod.substream(scenario.seed, rngmod.STREAM_EVENTS, block), size)


@dataclass(frozen=True, eq=False)
class MaxCountDistribution:
    support: np.ndarray
    pmf_specific: np.ndarray
    pmf_max: np.ndarray
    n_replicates: int
    mode: Mode
    target: str
    among: tuple[str, ...] = ()
    tally_specific: np.ndarray | None = field(default=None, repr=False)
    tally_max: np.ndarray | None = field(default=None, repr=False)

    def tail_specific(self, m: int) -> float:
        return float(self.pmf_specific[self.support >= m].sum()) if m > 0 else 1.0

    def tail_max(self, m: int) -> float:
        return float(self.pmf_max[self.support >= m].sum()) if m > 0 else 1.0

    def standard_error(self, p: float) -> float:
        """Binomial Monte Carlo error of an estimated probability; 0 in exact mode."""
        if self.mode is Mode.EXACT:
            return 0.0
        return math.sqrt(max(p * (1 - p), 0.0) / self.n_replicates)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "n_replicates": self.n_replicates,
            "target": self.target,
            "among": list(self.among),
            "support": [int(s) for s in self.support],
            "pmf_specific": [float(p) for p in self.pmf_specific],
            "pmf_max": [float(p) for p in self.pmf_max],
        }


def _columns(scenario: WardScenario, among: Sequence[str] | None) -> tuple[int, list[int], tuple[str, ...]]:
    names = scenario.nurses
    group = tuple(among) if among is not None else tuple(names)
    unknown = [g for g in group if g not in names]
    if unknown or not group:
        raise ValueError(f"comparison group must be non-empty scenario nurses, got {group}")
    return names.index(scenario.target), [names.index(g) for g in group], group


def _from_tallies(spec: np.ndarray, mx: np.ndarray, total: int, mode: Mode, scenario: WardScenario,
                  group: tuple[str, ...]) -> MaxCountDistribution:
    size = max(len(spec), len(mx), scenario.n_events + 1)
    spec = np.pad(spec, (0, size - len(spec)))
    mx = np.pad(mx, (0, size - len(mx)))
    return MaxCountDistribution(np.arange(size), spec / total, mx / total, total if mode is Mode.MONTE_CARLO else 0,
                                mode, scenario.target, group, spec, mx)


def simulate_null(scenario: WardScenario, replicates: int, among: Sequence[str] | None = None,
                  threads: int = 1) -> MaxCountDistribution:
    """Monte Carlo null; integer tallies per block make it thread-count independent."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    t, cols, group = _columns(scenario, among)
    duty = scenario.duty_matrix()

    def run(block: int, start: int, size: int):
        counts = event_block(scenario, block, size) @ duty
        return (np.bincount(counts[:, t], minlength=1),
                np.bincount(counts[:, cols].max(axis=1), minlength=1))

    parts = rngmod.map_blocks(run, replicates, threads)
    width = max(max(len(s), len(m)) for s, m in parts)
    spec = sum(np.pad(s, (0, width - len(s))) for s, _ in parts)
    mx = sum(np.pad(m, (0, width - len(m))) for _, m in parts)
    return _from_tallies(spec, mx, replicates, Mode.MONTE_CARLO, scenario, group)


def exact_max_distribution(scenario: WardScenario, among: Sequence[str] | None = None,
                           chunk: int = 65536) -> MaxCountDistribution:
    """Enumerate every placement of the events on distinct shifts."""
    if scenario.assignment is not Assignment.UNIFORM:
        raise CapacityError("exact enumeration covers uniform_without_replacement only")
    total = math.comb(scenario.n_shifts, scenario.n_events)
    if total > ENUMERATION_LIMIT:
        raise CapacityError(
            f"C({scenario.n_shifts}, {scenario.n_events}) = {total} placements exceeds "
            f"{ENUMERATION_LIMIT}; use simulate_null")
    t, cols, group = _columns(scenario, among)
    duty = scenario.duty_matrix()
    k = scenario.n_events
    spec = np.zeros(k + 1, dtype=np.int64)
    mx = np.zeros(k + 1, dtype=np.int64)
    if k == 0:
        spec[0] = mx[0] = 1
        return _from_tallies(spec, mx, 1, Mode.EXACT, scenario, group)
    combos = itertools.combinations(range(scenario.n_shifts), k)
    while True:
        batch = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64).reshape(-1, k)
        if batch.shape[0] == 0:
            break
        counts = duty[batch].sum(axis=1)
        spec += np.bincount(counts[:, t], minlength=k + 1)
        mx += np.bincount(counts[:, cols].max(axis=1), minlength=k + 1)
    return _from_tallies(spec, mx, total, Mode.EXACT, scenario, group)


def null_distribution(scenario: WardScenario, replicates: int, among: Sequence[str] | None = None,
                      threads: int = 1, prefer_exact: bool = True) -> MaxCountDistribution:
    if (prefer_exact and scenario.assignment is Assignment.UNIFORM
            and math.comb(scenario.n_shifts, scenario.n_events) <= ENUMERATION_LIMIT):
        return exact_max_distribution(scenario, among)
    return simulate_null(scenario, replicates, among, threads)


@dataclass(frozen=True, eq=False)
class CalibrationReport:
    top_nurse: str
    observed_max: int
    p_specific: float
    p_max: float
    sharpshooter_ratio: float
    p_max_comparable: float
    comparable: tuple[str, ...]
    independence_approx: float
    mode: Mode
    n_replicates: int
    se_specific: float
    se_max: float
    se_max_comparable: float
    distribution: MaxCountDistribution | None = None
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out = {
            "top_nurse": self.top_nurse,
            "observed_max": self.observed_max,
            "p_specific_ge_m": self.p_specific,
            "p_max_ge_m": self.p_max,
            "sharpshooter_ratio": self.sharpshooter_ratio,
            "comparable_nurses": list(self.comparable),
            "p_max_comparable_ge_m": self.p_max_comparable,
            "independence_approx_comparable": self.independence_approx,
            "mode": self.mode.value,
            "replicates": self.n_replicates,
            "mc_se": {"p_specific": self.se_specific, "p_max": self.se_max,
                      "p_max_comparable": self.se_max_comparable},
            # ratio of the two tails doubles as the effect size of the top nurse's count
            "effect_size": self.sharpshooter_ratio,
        }
        if self.distribution is not None:
            out["distribution"] = self.distribution.to_dict()
        return out


def coincidence_calibration(chart: RosterChart, schedule: Schedule,
                            scenario_overrides: Mapping | None = None, replicates: int = 100_000,
                            threads: int = 1, prefer_exact: bool = True) -> CalibrationReport:
    """Compare the chart's top count with the null for a named nurse and for the maximum.

    The comparison group for the "some comparable nurse tops the chart" tail is
    every nurse sharing the top nurse's employment class.
    """
    overrides = dict(scenario_overrides or {})
    counts = presence_counts(chart)
    warnings = []
    base = scenario_from_schedule(schedule, overrides.pop("n_events", len(chart.events)),
                                  nurses=chart.nurse_ids, **overrides)
    scheduled = [n for n in chart.nurse_ids if n in base.nurse_schedules]
    dropped = [n for n in chart.nurse_ids if n not in base.nurse_schedules]
    if dropped:
        warnings.append(f"nurses without scheduled shifts left out of the null: {', '.join(dropped)}")
    m = max((counts[n] for n in scheduled), default=0)
    top = next(n for n in scheduled if counts[n] == m)
    cls = chart.nurse(top).employment_class
    comparable = tuple(n for n in scheduled if chart.nurse(n).employment_class == cls)
    scen = base.with_(target=top)
    if m == 0:
        return CalibrationReport(top, 0, 1.0, 1.0, 1.0, 1.0, comparable, 1.0, Mode.EXACT, 0,
                                 0.0, 0.0, 0.0, None, tuple(warnings + ["no events: calibration is trivial"]))
    dist = null_distribution(scen, replicates, None, threads, prefer_exact)
    dist_cmp = null_distribution(scen, replicates, comparable, threads, prefer_exact)
    p_s, p_m, p_c = dist.tail_specific(m), dist.tail_max(m), dist_cmp.tail_max(m)
    ratio = p_m / p_s if p_s > 0 else math.inf
    if p_s == 0:
        warnings.append("named-nurse tail estimated as 0; increase replicates")
    approx = 1.0 - (1.0 - p_s) ** len(comparable)
    return CalibrationReport(top, m, p_s, p_m, ratio, p_c, comparable, approx, dist.mode,
                             dist.n_replicates, dist.standard_error(p_s), dist.standard_error(p_m),
                             dist_cmp.standard_error(p_c), dist, tuple(warnings))
