"""Back-extrapolation of a postmortem concentration to the moment of death.

A straight line is fitted to (hours since death, concentration) pairs from past
cases; its intercept estimates the concentration at death. The question for a
single decedent is answered by the prediction interval at t = 0, which is far
wider than the confidence interval for the line itself.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .rng import STREAM_REGRESSION, substream

# serum reference range, mmol/L; a configurable convention, not case data
NORMAL_POTASSIUM = (3.5, 5.0)


class DegenerateDesign(ValueError):
    pass


class Verdict(str, enum.Enum):
    EXCLUDES_NORMAL = "excludes_normal"
    CONSISTENT_WITH_NORMAL = "consistent_with_normal"


# ---------------------------------------------------------------- Student t

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    x = df / (df + t * t)
    tail = 0.5 * betainc_reg(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def t_pdf(t: float, df: float) -> float:
    return math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)
                    - 0.5 * math.log(df * math.pi) - (df + 1) / 2 * math.log1p(t * t / df))


def t_quantile(p: float, df: float) -> float:
    """Inverse t CDF: bracketing bisection refined by safeguarded Newton steps."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if df <= 0:
        raise ValueError("df must be positive")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < p:
        lo, hi = hi, hi * 2.0
    x = 0.5 * (lo + hi)
    for _ in range(200):
        f = t_cdf(x, df) - p
        if f > 0:
            hi = x
        else:
            lo = x
        step = f / t_pdf(x, df)
        nxt = x - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 1e-14 * max(1.0, abs(x)):
            return nxt
        x = nxt
    return x


# ---------------------------------------------------------------- regression

@dataclass(frozen=True, eq=False)
class DecayFit:
    hours: np.ndarray
    concentration: np.ndarray
    slope: float
    intercept: float
    residual_sd: float | None

    @property
    def n(self) -> int:
        return len(self.hours)

    @property
    def mean_time(self) -> float:
        return float(self.hours.mean())

    @property
    def sxx(self) -> float:
        return float(((self.hours - self.hours.mean()) ** 2).sum())

    @property
    def residuals(self) -> np.ndarray:
        return self.concentration - (self.intercept + self.slope * self.hours)

    def predict(self, t: float | np.ndarray) -> float | np.ndarray:
        return self.intercept + self.slope * np.asarray(t, dtype=float)

    def prediction_interval_at(self, t: float | np.ndarray, level: float = 0.95) -> float | np.ndarray:
        """Half-width of the interval for one new observation at time ``t``."""
        if self.n < 3 or self.residual_sd is None:
            raise ValueError("prediction intervals need at least three observations")
        q = t_quantile(0.5 + level / 2.0, self.n - 2)
        lev = 1.0 + 1.0 / self.n + (np.asarray(t, dtype=float) - self.mean_time) ** 2 / self.sxx
        return q * self.residual_sd * np.sqrt(lev)

    def band(self, ts: Sequence[float], level: float = 0.95) -> list[tuple[float, float, float, float]]:
        ts = np.asarray(ts, dtype=float)
        fit = self.predict(ts)
        half = self.prediction_interval_at(ts, level)
        return [(float(t), float(f), float(f - h), float(f + h)) for t, f, h in zip(ts, fit, half)]


def fit_decay(data: Sequence[tuple[float, float]]) -> DecayFit:
    """Ordinary least squares line of concentration on hours since death."""
    arr = np.asarray(data, dtype=float).reshape(-1, 2)
    if len(arr) < 2:
        raise ValueError("need at least two observations")
    t, y = arr[:, 0], arr[:, 1]
    tc = t - t.mean()
    sxx = float(tc @ tc)
    if sxx == 0.0:
        raise DegenerateDesign("all observation times are identical; slope is not identifiable")
    slope = float(tc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * t.mean())
    sd = None
    if len(arr) >= 3:
        res = y - (intercept + slope * t)
        sd = math.sqrt(float(res @ res) / (len(arr) - 2))
    return DecayFit(t, y, slope, intercept, sd)


@dataclass(frozen=True)
class DeathInterval:
    point: float
    lower: float
    upper: float
    level: float
    degenerate: bool = False
    kind: str = "prediction interval for a single decedent (linear model)"

    def to_dict(self) -> dict:
        return {"point": self.point, "lower": self.lower, "upper": self.upper, "level": self.level,
                "degenerate": self.degenerate, "interval_kind": self.kind}


def concentration_at_death_interval(fit: DecayFit, level: float = 0.95) -> DeathInterval:
    """Prediction interval at t = 0; zero residual spread yields a flagged zero-width interval."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if fit.n < 3 or fit.residual_sd is None:
        raise ValueError("prediction intervals need at least three observations")
    point = fit.intercept
    scale = max(1.0, float(np.abs(fit.concentration).max()))
    if fit.residual_sd <= 1e-12 * scale:
        return DeathInterval(point, point, point, level, True)
    half = float(fit.prediction_interval_at(0.0, level))
    return DeathInterval(point, point - half, point + half, level)


def exclusion_verdict(interval: DeathInterval | tuple[float, float, float],
                      normal_range: tuple[float, float] = NORMAL_POTASSIUM) -> Verdict:
    """Closed intervals: touching the normal range counts as overlap."""
    low, high = normal_range
    if low > high:
        raise ValueError("normal range must have low <= high")
    if isinstance(interval, DeathInterval):
        lo, hi = interval.lower, interval.upper
    else:
        _, lo, hi = interval
    if hi < low or lo > high:
        return Verdict.EXCLUDES_NORMAL
    return Verdict.CONSISTENT_WITH_NORMAL


def load_decay_data(path: str | Path) -> list[tuple[float, float]]:
    """Read ``hours_postmortem,concentration_mmol_per_l`` rows."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    for row in csv.DictReader(lines):
        out.append((float(row["hours_postmortem"]), float(row["concentration_mmol_per_l"])))
    return out


def synthetic_decay(intercept: float, slope: float, noise_sd: float, hours: Sequence[float],
                    seed: int, counter: int = 0) -> list[tuple[float, float]]:
    """Seeded straight-line data with Gaussian scatter."""
    g = substream(seed, STREAM_REGRESSION, counter)
    t = np.asarray(hours, dtype=float)
    y = intercept + slope * t + g.normal(0.0, noise_sd, len(t))
    return list(zip(t.tolist(), y.tolist()))


@dataclass(frozen=True)
class Coverage:
    new_observation: float
    true_intercept: float
    regenerations: int

    def se(self, p: float) -> float:
        return math.sqrt(p * (1 - p) / self.regenerations)


def coverage_simulation(intercept: float, slope: float, noise_sd: float, hours: Sequence[float],
                        level: float, seed: int, regenerations: int) -> Coverage:
    """Fraction of regenerated fits whose t = 0 interval covers a fresh decedent's value
    (and, separately, the true line's intercept)."""
    hit_new = hit_line = 0
    for i in range(regenerations):
        fit = fit_decay(synthetic_decay(intercept, slope, noise_sd, hours, seed, i))
        iv = concentration_at_death_interval(fit, level)
        # the decedent's own value carries the same scatter as the reference cases
        fresh = intercept + substream(seed, "fresh", i).normal(0.0, noise_sd)
        hit_new += iv.lower <= fresh <= iv.upper
        hit_line += iv.lower <= intercept <= iv.upper
    return Coverage(hit_new / regenerations, hit_line / regenerations, regenerations)
