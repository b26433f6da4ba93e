"""Texas sharpshooter simulator.

Events come from the null process of :mod:`null_models`; whether an event is
catalogued as suspicious then depends on whether the target nurse was on duty.
Optional targeted trawling adds events found only by re-examining her shifts.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .association import Assoc2x2, Sided, TestResult, _fisher_p, fisher_exact, hypergeom_logpmf
from .null_models import WardScenario, event_block
from .roster import EventKind, EventRecord, Nurse, RosterChart, Schedule, Shift

STREAM_RANDOMIZE = "randomize"


@dataclass(frozen=True)
class SelectionPolicy:
    q_present: float
    q_absent: float
    extra_hunt: int = 0
    blind: bool = False

    def __post_init__(self):
        for name in ("q_present", "q_absent"):
            q = getattr(self, name)
            if not 0.0 <= q <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {q}")
        if self.extra_hunt < 0:
            raise ValueError("extra_hunt must be >= 0")
        if self.blind and self.q_present != self.q_absent:
            raise ValueError("a blind policy cannot flag differently by presence")

    @classmethod
    def blinded(cls, q: float) -> "SelectionPolicy":
        return cls(q, q, 0, True)

    def to_dict(self) -> dict:
        return {"q_present": self.q_present, "q_absent": self.q_absent,
                "extra_hunt": self.extra_hunt, "blind": self.blind}


@dataclass(frozen=True)
class BiasRunResult:
    full_data_test: TestResult
    flagged_subset_test: TestResult
    omitted_count: int
    apparent_vs_true_ratio: float


@functools.lru_cache(maxsize=65536)
def _point_mass(a: int, b: int, c: int, d: int) -> float:
    return math.exp(hypergeom_logpmf(a, a + b + c + d, a + c, a + b))


def _tables(events: np.ndarray, duty: np.ndarray) -> np.ndarray:
    """(size, 4) cells a, b, c, d from events-per-shift and the target's rota."""
    quiet = events == 0
    return np.stack([
        events @ duty,
        events @ (1 - duty),
        quiet @ duty,
        quiet @ (1 - duty),
    ], axis=1).astype(np.int64)


def _pvalues(cells: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One-sided exact p, randomized p, corrected RR and degenerate flag per row."""
    n = cells.shape[0]
    p = np.ones(n)
    prand = u.copy()
    degen = np.zeros(n, dtype=bool)
    for i, (a, b, c, d) in enumerate(cells.tolist()):
        if 0 in (a + b, c + d, a + c, b + d):
            degen[i] = True
            continue
        p[i] = _fisher_p(a, b, c, d, True)
        prand[i] = p[i] - u[i] * _point_mass(a, b, c, d)
    a, b, c, d = (cells[:, j].astype(float) for j in range(4))
    rr = ((a + 0.5) / (a + c + 1.0)) / ((b + 0.5) / (b + d + 1.0))
    return p, np.clip(prand, 0.0, 1.0), rr, degen


@dataclass(frozen=True)
class _Draw:
    base: np.ndarray
    flagged_base: np.ndarray
    hunted: np.ndarray
    hunted_flagged: np.ndarray


def _draw(scenario: WardScenario, policy: SelectionPolicy, block: int, size: int) -> _Draw:
    duty = np.array([i in scenario.nurse_schedules[scenario.target] for i in range(scenario.n_shifts)],
                    dtype=np.int64)
    base = event_block(scenario, block, size)
    sel = rngmod.substream(scenario.seed, rngmod.STREAM_SELECTION, block)
    q = np.where(duty == 1, policy.q_present, policy.q_absent)
    flagged = sel.binomial(base, np.broadcast_to(q, base.shape)).astype(np.int64)
    hunted = np.zeros_like(base)
    hunted_flagged = np.zeros_like(base)
    if policy.extra_hunt:
        own = np.flatnonzero(duty)
        draws = rngmod.substream(scenario.seed, rngmod.STREAM_HUNT, block).random(
            (size, policy.extra_hunt, 2))
        where = own[np.minimum((draws[..., 0] * len(own)).astype(np.int64), len(own) - 1)]
        keep = draws[..., 1] < policy.q_present
        rows = np.repeat(np.arange(size), policy.extra_hunt)
        np.add.at(hunted, (rows, where.ravel()), 1)
        np.add.at(hunted_flagged, (rows, where.ravel()), keep.ravel().astype(np.int64))
    return _Draw(base, flagged, hunted, hunted_flagged)


@dataclass(frozen=True, eq=False)
class BiasDistribution:
    """Per-replicate outcomes of :func:`apply_selection`, replicate order."""

    policy: SelectionPolicy
    replicates: int
    full_cells: np.ndarray = field(repr=False)
    flagged_cells: np.ndarray = field(repr=False)
    full_p: np.ndarray = field(repr=False)
    flagged_p: np.ndarray = field(repr=False)
    full_p_randomized: np.ndarray = field(repr=False)
    flagged_p_randomized: np.ndarray = field(repr=False)
    full_rr: np.ndarray = field(repr=False)
    flagged_rr: np.ndarray = field(repr=False)
    flagged_degenerate: np.ndarray = field(repr=False)
    omitted: np.ndarray = field(repr=False)

    def result(self, i: int) -> BiasRunResult:
        full = fisher_exact(Assoc2x2(*self.full_cells[i].tolist()), Sided.ONE)
        flag = fisher_exact(Assoc2x2(*self.flagged_cells[i].tolist()), Sided.ONE)
        return BiasRunResult(full, flag, int(self.omitted[i]),
                             flag.effect_size_corrected / full.effect_size_corrected)

    @property
    def apparent_vs_true_ratio(self) -> np.ndarray:
        return self.flagged_rr / self.full_rr

    def summary(self) -> dict:
        def q(x):
            return {k: float(v) for k, v in zip(("q05", "median", "q95"), np.quantile(x, [0.05, 0.5, 0.95]))}
        r = self.replicates
        frac = lambda x, a: float(np.mean(x <= a))
        out = {
            "policy": self.policy.to_dict(),
            "replicates": r,
            "degenerate_flagged_replicates": int(self.flagged_degenerate.sum()),
            "mean_omitted": float(self.omitted.mean()),
            "mc_se_mean_omitted": float(self.omitted.std(ddof=1) / math.sqrt(r)) if r > 1 else 0.0,
        }
        for name, p, rr in (("full_data", self.full_p, self.full_rr),
                            ("flagged_subset", self.flagged_p, self.flagged_rr)):
            rej = {str(a): frac(p, a) for a in (0.01, 0.05, 0.1)}
            out[name] = {
                "p_value": q(p),
                "effect_size_corrected": q(rr),
                "rejection_rate": rej,
                "mc_se_rejection_rate": {k: math.sqrt(v * (1 - v) / r) for k, v in rej.items()},
            }
        ratio = self.apparent_vs_true_ratio
        out["apparent_vs_true_ratio"] = q(ratio)
        out["ks_randomized_flagged_vs_uniform"] = ks_uniform(self.flagged_p_randomized)
        out["ks_plus_flagged_vs_uniform"] = ks_plus_uniform(self.flagged_p)
        return out

    def histograms(self, bins: int = 20) -> dict[str, np.ndarray]:
        edges = np.linspace(0.0, 1.0, bins + 1)
        return {"edges": edges,
                "full": np.histogram(self.full_p, edges)[0],
                "flagged": np.histogram(self.flagged_p, edges)[0]}


def ks_uniform(x: np.ndarray) -> float:
    """Two-sided Kolmogorov-Smirnov distance to Uniform(0, 1)."""
    x = np.sort(np.asarray(x, float))
    n = len(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))


def ks_plus_uniform(x: np.ndarray) -> float:
    """sup_t (F_n(t) - t): excess of small p-values over the uniform."""
    x = np.sort(np.asarray(x, float))
    n = len(x)
    return float(max(0.0, np.max(np.arange(1, n + 1) / n - x)))


def apply_selection(scenario: WardScenario, policy: SelectionPolicy, replicates: int,
                    threads: int = 1) -> BiasDistribution:
    """Per replicate: null events, suspicion flags by presence, tests on both catalogues.

    A replicate with nothing flagged keeps a degenerate flagged test (p = 1).
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    duty = np.array([i in scenario.nurse_schedules[scenario.target] for i in range(scenario.n_shifts)],
                    dtype=np.int64)

    def run(block: int, start: int, size: int):
        d = _draw(scenario, policy, block, size)
        full = _tables(d.base, duty)
        flagged = _tables(d.flagged_base + d.hunted_flagged, duty)
        u = rngmod.substream(scenario.seed, STREAM_RANDOMIZE, block).random((size, 2))
        fp, fpr, frr, _ = _pvalues(full, u[:, 0])
        gp, gpr, grr, gdeg = _pvalues(flagged, u[:, 1])
        omitted = (d.base - d.flagged_base) @ (1 - duty)
        return full, flagged, fp, gp, fpr, gpr, frr, grr, gdeg, omitted

    parts = rngmod.map_blocks(run, replicates, threads)
    cols = [np.concatenate([p[j] for p in parts]) for j in range(10)]
    return BiasDistribution(policy, replicates, *cols)


@dataclass(frozen=True, eq=False)
class Reenactment:
    flagged: RosterChart
    complement: RosterChart
    schedule: Schedule


def letby_chart_reenactment(scenario: WardScenario, policy: SelectionPolicy,
                            shift_minutes: int = 720, replicate: int = 0) -> Reenactment:
    """Prosecution-style chart of flagged events, plus the events nobody catalogued.

    Shift i spans [i * shift_minutes, (i + 1) * shift_minutes); events of a shift
    are spread evenly inside it. Every on-duty nurse counts as present.
    """
    block, row = divmod(replicate, rngmod.BLOCK)
    # rows of a block are drawn in sequence, so a shorter block reproduces row `row`
    d = _draw(scenario, policy, block, row + 1)
    base, flagged = d.base[row], d.flagged_base[row]
    hunted, hunted_flagged = d.hunted[row], d.hunted_flagged[row]
    names = scenario.nurses
    shifts = tuple(
        Shift(f"s{i:04d}", i * shift_minutes, (i + 1) * shift_minutes,
              frozenset(n for n in names if i in scenario.nurse_schedules[n]))
        for i in range(scenario.n_shifts))
    keep, drop = [], []
    serial = 0
    for i, s in enumerate(shifts):
        # base events first, flagged ones leading; then hunted ones
        kinds = ([(EventKind.DEATH, True)] * int(flagged[i])
                 + [(EventKind.DEATH, False)] * int(base[i] - flagged[i])
                 + [(EventKind.COLLAPSE, True)] * int(hunted_flagged[i])
                 + [(EventKind.COLLAPSE, False)] * int(hunted[i] - hunted_flagged[i]))
        for j, (kind, flag) in enumerate(kinds):
            serial += 1
            t = s.start + (j + 1) * shift_minutes // (len(kinds) + 1)
            ev = EventRecord(f"e{serial:05d}", kind, t, s.id, flag, s.on_duty)
            (keep if flag else drop).append(ev)
    nurses = tuple(Nurse(n) for n in names)
    exposure = tuple(len(scenario.nurse_schedules[n]) for n in names)
    note = (f"selection policy q_present={policy.q_present} q_absent={policy.q_absent} "
            f"extra_hunt={policy.extra_hunt} blind={policy.blind}; seed={scenario.seed} replicate={replicate}")
    return Reenactment(
        RosterChart(nurses, tuple(keep), exposure, (note,)),
        RosterChart(nurses, tuple(drop), exposure, (note + "; events not catalogued",)),
        Schedule(shifts),
    )
