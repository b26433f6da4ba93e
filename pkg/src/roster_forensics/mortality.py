"""Expected deaths from elicited per-patient risks, spike tails and acuity shifts."""

from __future__ import annotations

import csv
import enum
import math
from fractions import Fraction
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .null_models import CapacityError

EXACT_LIMIT = 10_000


class TailModel(str, enum.Enum):
    POISSON_BINOMIAL = "poisson_binomial_exact"
    POISSON = "poisson"


@dataclass(frozen=True)
class Patient:
    id: str
    p_death: float
    gestation_weeks: float | None = None
    birthweight_g: float | None = None
    cluster_id: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_death <= 1.0:
            raise ValueError(f"patient {self.id}: p_death must lie in [0, 1], got {self.p_death}")


@dataclass(frozen=True)
class MortalityCohort:
    patients: tuple[Patient, ...]

    def __post_init__(self):
        object.__setattr__(self, "patients", tuple(self.patients))

    @classmethod
    def from_probabilities(cls, ps: Sequence[float]) -> "MortalityCohort":
        return cls(tuple(Patient(f"p{i}", float(p)) for i, p in enumerate(ps)))

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p.p_death for p in self.patients], dtype=float)

    @property
    def expected_deaths(self) -> float:
        return math.fsum(p.p_death for p in self.patients)

    @property
    def se(self) -> float:
        # exact rational variance, so e.g. ten patients at 0.1 give sqrt(0.9) on the nose
        var = sum((Fraction(p.p_death) * (1 - Fraction(p.p_death)) for p in self.patients), Fraction(0))
        return math.sqrt(float(var))


def expected_mortality(cohort: MortalityCohort) -> tuple[float, float]:
    """Sum of death chances and the square root of the summed Bernoulli variances."""
    return cohort.expected_deaths, cohort.se


def poisson_binomial_pmf(ps: Sequence[float]) -> np.ndarray:
    """Distribution of a sum of independent Bernoulli(p_i) by sequential convolution."""
    pmf = np.zeros(len(ps) + 1)
    pmf[0] = 1.0
    for k, p in enumerate(ps, start=1):
        pmf[1:k + 1] = pmf[1:k + 1] * (1.0 - p) + pmf[:k] * p
        pmf[0] *= 1.0 - p
    return pmf


def poisson_tail(observed: int, lam: float) -> float:
    """P(N >= observed) for N ~ Poisson(lam), summed upward from ``observed``."""
    if observed <= 0:
        return 1.0
    if lam <= 0:
        return 0.0
    if observed <= lam:
        # the lower sum is short and the complement loses nothing
        log_terms = [k * math.log(lam) - lam - math.lgamma(k + 1) for k in range(observed)]
        return max(0.0, 1.0 - math.fsum(math.exp(t) for t in log_terms))
    # terms shrink once k > lam; sum them relative to the first to dodge underflow
    log_first = observed * math.log(lam) - lam - math.lgamma(observed + 1)
    rel, k, ratios = 1.0, observed, [1.0]
    while rel > 1e-18:
        k += 1
        rel *= lam / k
        ratios.append(rel)
    return min(1.0, math.exp(log_first + math.log(math.fsum(ratios))))


def spike_tail(observed: int, cohort: MortalityCohort | None = None, rate: float | None = None,
               model: TailModel | str = TailModel.POISSON_BINOMIAL) -> float:
    """P(deaths >= observed) under the cohort's risks or a Poisson rate."""
    model = TailModel(model)
    if observed < 0:
        raise ValueError("observed must be >= 0")
    if observed == 0:
        return 1.0
    if model is TailModel.POISSON:
        lam = rate if rate is not None else (cohort.expected_deaths if cohort is not None else None)
        if lam is None:
            raise ValueError("poisson model needs a rate or a cohort")
        return poisson_tail(observed, lam)
    if cohort is None:
        raise ValueError("poisson_binomial_exact needs a cohort")
    if len(cohort.patients) > EXACT_LIMIT:
        raise CapacityError(f"exact convolution limited to {EXACT_LIMIT} patients, got {len(cohort.patients)}")
    pmf = poisson_binomial_pmf(cohort.probabilities)
    return float(min(1.0, math.fsum(pmf[observed:])))


def spike_tail_clustered(observed: int, cohort: MortalityCohort, rho: float, seed: int,
                         replicates: int = 100_000, threads: int = 1) -> tuple[float, float]:
    """Monte Carlo tail allowing shared vulnerability within clusters (twins, triplets).

    One-factor mixture: each patient in a cluster reuses the cluster's uniform with
    probability ``rho``, otherwise draws its own; death iff uniform < p_death.
    Patients without a cluster id are independent. Returns (tail, MC standard error).
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    ps = cohort.probabilities
    labels: dict[str, int] = {}
    cluster = np.array([labels.setdefault(p.cluster_id, len(labels)) if p.cluster_id is not None else -1
                        for p in cohort.patients])
    n_clusters = max(len(labels), 1)

    def run(block: int, start: int, size: int) -> int:
        g = rngmod.substream(seed, rngmod.STREAM_COHORT, block)
        own = g.random((size, len(ps)))
        common = g.random((size, n_clusters))
        share = g.random((size, len(ps))) < rho
        u = own.copy()
        clustered = cluster >= 0
        u[:, clustered] = np.where(share[:, clustered], common[:, cluster[clustered]], own[:, clustered])
        deaths = (u < ps).sum(axis=1)
        return int((deaths >= observed).sum())

    hits = sum(rngmod.map_blocks(run, replicates, threads))
    p = hits / replicates
    return p, math.sqrt(p * (1 - p) / replicates)


@dataclass(frozen=True)
class RiskCurve:
    """Death probability against one covariate, linear between knots."""

    covariate: str
    knots: tuple[float, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        order = np.argsort(self.knots)
        xs = tuple(float(self.knots[i]) for i in order)
        ys = tuple(float(self.probabilities[i]) for i in order)
        if len(xs) < 2 or len(set(xs)) != len(xs):
            raise ValueError("risk curve needs at least two distinct knots")
        if any(not 0.0 <= y <= 1.0 for y in ys):
            raise ValueError("risk curve probabilities must lie in [0, 1]")
        if any(b > a for a, b in zip(ys, ys[1:])):
            raise ValueError("risk must not increase with gestation or birthweight")
        object.__setattr__(self, "knots", xs)
        object.__setattr__(self, "probabilities", ys)

    @property
    def domain(self) -> tuple[float, float]:
        return self.knots[0], self.knots[-1]

    def __call__(self, x: float) -> float:
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise ValueError(f"covariate {x} outside curve domain [{lo}, {hi}]")
        return float(np.interp(x, self.knots, self.probabilities))

    @classmethod
    def from_csv(cls, path: str | Path, covariate: str = "gestation_weeks") -> "RiskCurve":
        xs, ys = [], []
        for row in _csv_rows(path, ("covariate", "probability")):
            xs.append(float(row["covariate"]))
            ys.append(float(row["probability"]))
        return cls(covariate, tuple(xs), tuple(ys))


@dataclass(frozen=True)
class RiskGrid:
    """Joint gestation x birthweight table, bilinear between knots; only if supplied."""

    gestation: tuple[float, ...]
    birthweight: tuple[float, ...]
    table: tuple[tuple[float, ...], ...]

    def __call__(self, gestation: float, birthweight: float) -> float:
        g, w = np.asarray(self.gestation), np.asarray(self.birthweight)
        t = np.asarray(self.table, dtype=float)
        if not (g[0] <= gestation <= g[-1] and w[0] <= birthweight <= w[-1]):
            raise ValueError("covariates outside the risk grid")
        along_w = np.array([np.interp(birthweight, w, row) for row in t])
        return float(np.interp(gestation, g, along_w))


def acuity_shift(cohort: MortalityCohort, curve: RiskCurve, shift: float) -> tuple[float, float, float]:
    """Expected deaths read off ``curve`` before and after moving every covariate by ``shift``."""
    base, moved = [], []
    for p in cohort.patients:
        x = getattr(p, curve.covariate)
        if x is None:
            raise ValueError(f"patient {p.id} has no {curve.covariate}")
        try:
            base.append(curve(x))
            moved.append(curve(x + shift))
        except ValueError as exc:
            raise ValueError(f"patient {p.id}: {exc}") from None
    b, s = math.fsum(base), math.fsum(moved)
    if b == 0:
        ratio = 1.0 if s == 0 else math.inf
    else:
        ratio = s / b
    return b, s, ratio


def recompute_from_curve(cohort: MortalityCohort, curve: RiskCurve, shift: float = 0.0) -> MortalityCohort:
    return MortalityCohort(tuple(replace(p, p_death=curve(getattr(p, curve.covariate) + shift))
                                 for p in cohort.patients))


@dataclass(frozen=True)
class MultipleUnits:
    probability: float
    tail: float
    n_units: int
    assumption: str = "units independent"


def excess_and_multiple_testing(per_year_tail: float, n_units: int) -> MultipleUnits:
    """Chance that at least one of ``n_units`` units shows a spike this extreme."""
    if not 0.0 <= per_year_tail <= 1.0:
        raise ValueError("tail must lie in [0, 1]")
    if n_units < 1:
        raise ValueError("n_units must be >= 1")
    if per_year_tail == 1.0:
        prob = 1.0
    else:
        prob = -math.expm1(n_units * math.log1p(-per_year_tail))
    return MultipleUnits(prob, per_year_tail, n_units)


def _csv_rows(path: str | Path, required: Sequence[str]):
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    yield from reader


def load_cohort(path: str | Path) -> MortalityCohort:
    """Read ``patient_id,p_death[,gestation_weeks][,birthweight_g][,cluster_id]``."""
    out = []
    for row in _csv_rows(path, ("patient_id", "p_death")):
        def opt(name):
            v = (row.get(name) or "").strip()
            return float(v) if v else None
        out.append(Patient(row["patient_id"].strip(), float(row["p_death"]), opt("gestation_weeks"),
                           opt("birthweight_g"), (row.get("cluster_id") or "").strip() or None))
    return MortalityCohort(tuple(out))
