"""Key/value scenario files (INI syntax) and the run configuration."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .bias_sim import SelectionPolicy
from .null_models import Assignment, WardScenario
from .timeline import RecordingRegime, SnapRule

COMMANDS = ("chart", "test", "calibrate", "bias", "mortality", "timeline", "extrapolate", "demo")
FORMATS = ("json", "csv_bundle")


class ConfigError(ValueError):
    """Bad or incomplete configuration; maps to exit status 2."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


@dataclass
class RunConfig:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    options: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    replicates: int | None = None
    out: str | None = None
    format: str = "json"
    force: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError("unknown_command", f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigError("bad_format", f"format must be one of {FORMATS}")
        if self.threads < 1:
            raise ConfigError("bad_threads", "--threads must be >= 1")
        if self.replicates is not None and self.replicates < 1:
            raise ConfigError("bad_replicates", "--replicates must be >= 1")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ConfigError("bad_seed", "seed must be a 64-bit unsigned integer")

    def echo(self) -> dict:
        """Everything that determines the report; threads and output location do not."""
        return {"command": self.command, "inputs": dict(self.inputs), "options": dict(self.options),
                "seed": self.seed, "replicates": self.replicates, "format": self.format}

    @classmethod
    def from_echo(cls, echo: dict, **overrides) -> "RunConfig":
        kw = dict(command=echo["command"], inputs=echo.get("inputs", {}),
                  options=echo.get("options", {}), seed=echo.get("seed"),
                  replicates=echo.get("replicates"), format=echo.get("format", "json"))
        kw.update(overrides)
        return cls(**kw)


def read_ini(path: str | Path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if not Path(path).exists():
        raise ConfigError("missing_file", f"config file not found: {path}")
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError("bad_config", f"{path}: {exc}") from None
    return cp


def parse_indices(spec: str) -> frozenset[int]:
    """``0-9, 20, 30:60:3`` -> shift indices (ranges inclusive, slices half-open)."""
    out: set[int] = set()
    for part in (p.strip() for p in spec.split(",")):
        if not part:
            continue
        try:
            if ":" in part:
                bits = [int(b) if b else None for b in part.split(":")]
                start, stop = bits[0] or 0, bits[1]
                step = bits[2] if len(bits) > 2 and bits[2] else 1
                if stop is None:
                    raise ValueError(part)
                out.update(range(start, stop, step))
            elif "-" in part[1:]:
                lo, hi = part.split("-", 1)
                out.update(range(int(lo), int(hi) + 1))
            else:
                out.add(int(part))
        except ValueError:
            raise ConfigError("bad_config", f"cannot read shift indices from {part!r}") from None
    return frozenset(out)


def _get(cp, section, key, conv=str, default=None):
    if not cp.has_option(section, key):
        if default is None:
            raise ConfigError("bad_config", f"[{section}] needs {key}")
        return default
    raw = cp.get(section, key)
    try:
        if conv is bool:
            return cp.getboolean(section, key)
        return conv(raw)
    except ValueError:
        raise ConfigError("bad_config", f"[{section}] {key}: cannot parse {raw!r}") from None


def scenario_from_ini(cp: configparser.ConfigParser, seed: int) -> WardScenario:
    if not cp.has_section("scenario") or not cp.has_section("schedules"):
        raise ConfigError("bad_config", "scenario files need [scenario] and [schedules] sections")
    scheds = {name: parse_indices(v) for name, v in cp.items("schedules")}
    try:
        return WardScenario(
            n_shifts=_get(cp, "scenario", "n_shifts", int),
            nurse_schedules=scheds,
            n_events=_get(cp, "scenario", "n_events", int),
            assignment=Assignment(_get(cp, "scenario", "assignment", str, Assignment.UNIFORM.value)),
            seed=seed,
            target=cp.get("scenario", "target", fallback=None),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("bad_config", f"scenario: {exc}") from None


def policy_from_ini(cp: configparser.ConfigParser) -> SelectionPolicy:
    if not cp.has_section("policy"):
        raise ConfigError("bad_config", "bias runs need a [policy] section")
    blind = _get(cp, "policy", "blind", bool, False)
    qp = _get(cp, "policy", "q_present", float, 0.5 if blind else None)
    qa = _get(cp, "policy", "q_absent", float, qp if blind else None)
    try:
        return SelectionPolicy(qp, qa, _get(cp, "policy", "extra_hunt", int, 0), blind)
    except ValueError as exc:
        raise ConfigError("bad_config", f"policy: {exc}") from None


@dataclass(frozen=True)
class TimelineSetup:
    rate: float
    days: int
    regime: RecordingRegime
    rota: dict[str, str]
    lead: float
    lag: float
    day_start: int
    day_length: int
    bin_minutes: int
    focus: str | None


def timeline_from_ini(cp: configparser.ConfigParser) -> TimelineSetup:
    s = "timeline"
    if not cp.has_section(s):
        raise ConfigError("bad_config", "timeline runs need a [timeline] section")
    handovers = [int(x) for x in _get(cp, s, "handovers", str, "420, 1140").split(",") if x.strip()]
    rota = {}
    for item in _get(cp, s, "rota").split(","):
        if ":" not in item:
            raise ConfigError("bad_config", f"rota entries look like NAME:day|night|both, got {item!r}")
        name, which = (p.strip() for p in item.split(":", 1))
        if which not in ("day", "night", "both"):
            raise ConfigError("bad_config", f"rota for {name} must be day, night or both")
        rota[name] = which
    if len(handovers) != 2:
        raise ConfigError("bad_config", "timeline rotas need exactly two handovers (day and night)")
    day_start, night_start = sorted(h % 1440 for h in handovers)
    day_length = night_start - day_start
    try:
        regime = RecordingRegime.handovers(handovers, _get(cp, s, "midnight", bool, True),
                                           SnapRule(_get(cp, s, "snap_rule", str, "next_check")))
    except ValueError as exc:
        raise ConfigError("bad_config", f"timeline: {exc}") from None
    return TimelineSetup(
        rate=_get(cp, s, "rate", float), days=_get(cp, s, "days", int), regime=regime, rota=rota,
        lead=_get(cp, s, "lead", float, 30.0), lag=_get(cp, s, "lag", float, 30.0),
        day_start=day_start,
        day_length=day_length,
        bin_minutes=_get(cp, s, "bin_minutes", int, 1),
        focus=cp.get(s, "focus", fallback=None),
    )
