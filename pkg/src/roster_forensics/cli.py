"""Command-line entry point: ``roster-forensics <command> [options]``.

Exit status 0 on success, 1 on domain or parse errors, 2 on configuration
errors; failures print a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import rng as rngmod
from .association import (Assoc2x2, Sided, build_table, combine_pvalues_fisher,
                          combine_pvalues_naive_product, fisher_exact)
from .bias_sim import apply_selection, letby_chart_reenactment
from .config import (ConfigError, RunConfig, policy_from_ini, read_ini, scenario_from_ini,
                     timeline_from_ini)
from .extrapolation import (NORMAL_POTASSIUM, concentration_at_death_interval, coverage_simulation,
                            exclusion_verdict, fit_decay, load_decay_data)
from .mortality import (RiskCurve, TailModel, acuity_shift, excess_and_multiple_testing,
                        expected_mortality, load_cohort, spike_tail, spike_tail_clustered)
from .null_models import CapacityError, coincidence_calibration
from .report import Report, dumps, emit_plot_series, lint, write_atomic
from .roster import (ChartError, EmploymentClass, Nurse, RosterChart, Schedule, dumps_chart,
                     dumps_schedule, load_chart, load_schedule, presence_counts, remove_event)
from .timeline import (attribution_table, clock_windows, day_night_rota, simulate_ward_deaths)

DEFAULT_REPLICATES = 10_000
DEMO_SEED = 42


class DomainError(ValueError):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def fixture(name: str) -> str:
    return str(resources.files("roster_forensics") / "fixtures" / name)


def _require(cfg: RunConfig, key: str) -> str:
    path = cfg.inputs.get(key)
    if not path:
        raise ConfigError("missing_input", f"{cfg.command} needs --{key.replace('_', '-')}")
    if not Path(path).exists():
        raise ConfigError("missing_file", f"input file not found: {path}")
    return path


def _seed(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise ConfigError("missing_seed",
                          f"{cfg.command} is stochastic: pass --seed or set {rngmod.SEED_ENV}")
    return cfg.seed


def _replicates(cfg: RunConfig) -> int:
    return cfg.replicates or DEFAULT_REPLICATES


def _nurse_meta(cfg: RunConfig) -> list[Nurse]:
    path = cfg.inputs.get("config")
    if not path:
        return []
    cp = read_ini(path)
    if not cp.has_section("nurses"):
        return []
    out = []
    for name, spec in cp.items("nurses"):
        parts = [p.strip() for p in spec.split(",")]
        try:
            out.append(Nurse(name, EmploymentClass(parts[0]), int(parts[1]) if len(parts) > 1 else 0))
        except ValueError as exc:
            raise ConfigError("bad_config", f"[nurses] {name}: {exc}") from None
    return out


def _load_chart_and_schedule(cfg: RunConfig) -> tuple[RosterChart, Schedule | None]:
    schedule = load_schedule(_require(cfg, "schedule")) if cfg.inputs.get("schedule") else None
    chart = load_chart(_require(cfg, "chart"), cfg.options.get("chart_format", "wide_csv"), schedule,
                       _nurse_meta(cfg))
    for eid in cfg.options.get("remove", []):
        chart = remove_event(chart, eid, cfg.options.get("remove_reason", ""))
    return chart, schedule


# ---------------------------------------------------------------- commands

def cmd_chart(cfg: RunConfig, rep: Report) -> None:
    chart, schedule = _load_chart_and_schedule(cfg)
    counts = presence_counts(chart)
    rep.results["chart"] = {
        "n_events": len(chart.events),
        "nurses": chart.nurse_ids,
        "presence_counts": counts,
        "presence_matrix": chart.presence.astype(int).tolist(),
        "shift_exposure": dict(zip(chart.nurse_ids, chart.shift_exposure)),
        "presence_definition": "on-shift presence as recorded in the chart file",
    }
    if not chart.events:
        rep.warn("chart has no events: association analyses are degenerate")
    rep.provenance.extend(chart.provenance)


def cmd_test(cfg: RunConfig, rep: Report) -> None:
    sided = Sided(cfg.options.get("sided", Sided.ONE.value))
    tests = []
    if cfg.inputs.get("chart"):
        chart, schedule = _load_chart_and_schedule(cfg)
        if schedule is None:
            raise ConfigError("missing_input", "test on a chart needs --schedule")
        nurse = cfg.options.get("nurse")
        if not nurse:
            raise ConfigError("missing_input", "test on a chart needs --nurse")
        res = fisher_exact(build_table(chart, nurse, schedule), sided)
        tests.append(res)
        rep.results["test"] = {"nurse": nurse, **res.to_dict()}
        rep.provenance.extend(chart.provenance)
    tabs = cfg.options.get("tables", [])
    table_tests = [fisher_exact(Assoc2x2(*cells), sided) for cells in tabs]
    if table_tests:
        rep.results["tables"] = [t.to_dict() for t in table_tests]
    tests.extend(table_tests)
    given = list(cfg.options.get("pvalues", []))
    if not tests and not given:
        raise ConfigError("missing_input", "test needs --chart, --table or --pvalues")
    if any(t.degenerate for t in tests):
        rep.warn("degenerate 2x2 table: p-value set to 1, raw effect size undefined or infinite")
    ps = given + [t.p_value for t in table_tests]
    if given or len(table_tests) >= 2:
        fisher = {"p_value": combine_pvalues_fisher(ps), "effect_size": None,
                  "effect_size_unavailable": True}
        if tabs and not given:
            fisher.update(effect_size=mantel_haenszel_rr(tabs), effect_size_unavailable=False,
                          effect_size_kind="Mantel-Haenszel risk ratio")
        rep.results["combination"] = {
            "inputs": ps,
            "fisher_method": fisher,
            "naive_product": combine_pvalues_naive_product(ps).to_dict(),
        }
        rep.warn("naive product of p-values is not a p-value (invalid_as_p_value)")


def mantel_haenszel_rr(tables) -> float:
    num = den = 0.0
    for a, b, c, d in tables:
        n = a + b + c + d
        if n == 0:
            continue
        num += a * (b + d) / n
        den += b * (a + c) / n
    return num / den if den > 0 else math.inf


def cmd_calibrate(cfg: RunConfig, rep: Report) -> None:
    seed = _seed(cfg)
    chart, schedule = _load_chart_and_schedule(cfg)
    if schedule is None:
        raise ConfigError("missing_input", "calibrate needs --schedule")
    overrides = {"seed": seed}
    if cfg.options.get("assignment"):
        overrides["assignment"] = cfg.options["assignment"]
    method = cfg.options.get("method", "auto")
    cal = coincidence_calibration(chart, schedule, overrides, _replicates(cfg), cfg.threads,
                                  prefer_exact=method != "monte_carlo")
    if method == "exact" and cal.mode.value != "exact_enumeration":
        raise DomainError("capacity", "instance too large for exact enumeration")
    rep.results["calibration"] = cal.to_dict()
    rep.warn(cal.warnings)
    rep.warn("null model: events placed on shifts at random; presence is shift-level")
    rep.provenance.extend(chart.provenance)
    if cal.distribution is not None:
        d = cal.distribution
        rep.add_series("null_pmf", ["count", "pmf_specific", "pmf_max"],
                       zip(d.support.tolist(), d.pmf_specific.tolist(), d.pmf_max.tolist()))


def cmd_bias(cfg: RunConfig, rep: Report) -> None:
    seed = _seed(cfg)
    cp = read_ini(_require(cfg, "config"))
    scen = scenario_from_ini(cp, seed)
    policy = policy_from_ini(cp)
    dist = apply_selection(scen, policy, _replicates(cfg), cfg.threads)
    summary = dist.summary()
    rep.results["bias"] = {"target": scen.target, **summary}
    rep.provenance.append(f"selection policy: {json.dumps(policy.to_dict(), sort_keys=True)}")
    if summary["degenerate_flagged_replicates"]:
        rep.warn(f"{summary['degenerate_flagged_replicates']} replicates flagged no events "
                 "(degenerate flagged test, p = 1, kept)")
    h = dist.histograms()
    rep.add_series("pvalue_histogram", ["bin_low", "bin_high", "full_count", "flagged_count"],
                   zip(h["edges"][:-1].tolist(), h["edges"][1:].tolist(), h["full"].tolist(),
                       h["flagged"].tolist()))
    if cfg.options.get("reenact"):
        re = letby_chart_reenactment(scen, policy)
        rep.results["reenactment"] = {
            "flagged_events": len(re.flagged.events),
            "complement_events": len(re.complement.events),
            "flagged_presence_counts": presence_counts(re.flagged),
        }
        rep.attachments["flagged.csv"] = dumps_chart(re.flagged)
        rep.attachments["complement.csv"] = dumps_chart(re.complement)
        rep.attachments["shifts.csv"] = dumps_schedule(re.schedule)


def cmd_mortality(cfg: RunConfig, rep: Report) -> None:
    cohort = load_cohort(_require(cfg, "cohort"))
    exp, se = expected_mortality(cohort)
    out = {"n_patients": len(cohort.patients), "expected_deaths": exp, "se": se}
    obs = cfg.options.get("observed")
    if obs is not None:
        model = TailModel(cfg.options.get("model", TailModel.POISSON_BINOMIAL.value))
        rate = cfg.options.get("rate")
        tail = spike_tail(obs, cohort, rate, model)
        lam = rate if rate is not None else exp
        out["spike"] = {"observed": obs, "model": model.value, "p_value": tail,
                        "effect_size": obs / lam if lam > 0 else math.inf,
                        "effect_size_kind": "observed / expected"}
        rep.warn("deaths treated as independent across patients")
        rho = cfg.options.get("rho")
        if rho is not None:
            p, mcse = spike_tail_clustered(obs, cohort, rho, _seed(cfg), _replicates(cfg), cfg.threads)
            out["spike_clustered"] = {"rho": rho, "p_value": p, "mc_se": mcse,
                                      "replicates": _replicates(cfg),
                                      "effect_size": obs / exp if exp > 0 else math.inf}
    units = cfg.options.get("units")
    if units:
        tail = cfg.options.get("unit_tail", out.get("spike", {}).get("p_value"))
        if tail is None:
            raise ConfigError("missing_input", "--units needs --observed or --unit-tail")
        mu = excess_and_multiple_testing(tail, units)
        out["multiple_units"] = {"per_unit_tail": tail, "n_units": units,
                                 "probability_some_unit": mu.probability, "assumption": mu.assumption}
        rep.warn("multiple-unit probability assumes independent units")
    if cfg.inputs.get("curve"):
        curve = RiskCurve.from_csv(_require(cfg, "curve"), cfg.options.get("covariate", "gestation_weeks"))
        shift = cfg.options.get("shift", -1.0)
        b, s, r = acuity_shift(cohort, curve, shift)
        out["acuity"] = {"covariate": curve.covariate, "shift": shift, "baseline_expected": b,
                         "shifted_expected": s, "ratio": r}
        rows = []
        step = -1.0 if shift <= 0 else 1.0
        for k in range(0, int(abs(shift) * 4) + 1):
            delta = step * k / 4
            try:
                rows.append((delta, *acuity_shift(cohort, curve, delta)))
            except ValueError:
                break
        rep.add_series("acuity", ["shift", "baseline_expected", "shifted_expected", "ratio"], rows)
    rep.results["mortality"] = out


def cmd_timeline(cfg: RunConfig, rep: Report) -> None:
    seed = _seed(cfg)
    setup = timeline_from_ini(read_ini(_require(cfg, "config")))
    shifts = day_night_rota(setup.days, setup.rota, setup.day_start, setup.day_length)
    windows = clock_windows(shifts, setup.lead, setup.lag)
    art = simulate_ward_deaths(setup.rate, setup.days, setup.regime, shifts, windows, seed,
                               _replicates(cfg), list(setup.rota), setup.bin_minutes, cfg.threads)
    summ = art.summary()
    tests = {}
    for n in art.nurses:
        t_true, t_rec = attribution_table(art, n, 0)
        tests[n] = {"replicate": 0,
                    "true_time": fisher_exact(t_true).to_dict(),
                    "recorded_time": fisher_exact(t_rec).to_dict()}
        summ["per_nurse"][n]["effect_size"] = summ["per_nurse"][n]["spurious_excess_mean"]
    summ["attribution_tests"] = tests
    summ["clock_lead_lag_minutes"] = [setup.lead, setup.lag]
    rep.results["timeline"] = summ
    rep.warn(art.warnings)
    rep.warn("clock-in lead and clock-out lag are assumed values")
    rep.add_series("deathtimes", ["time_of_day_minutes", "true_count", "recorded_count"],
                   art.histogram_rows())


def cmd_extrapolate(cfg: RunConfig, rep: Report) -> None:
    data = load_decay_data(_require(cfg, "data"))
    fit = fit_decay(data)
    level = cfg.options.get("level", 0.95)
    normal = tuple(cfg.options.get("normal_range", NORMAL_POTASSIUM))
    iv = concentration_at_death_interval(fit, level)
    verdict = exclusion_verdict(iv, normal)
    rep.results["extrapolation"] = {
        "n": fit.n, "slope": fit.slope, "intercept": fit.intercept, "residual_sd": fit.residual_sd,
        "interval": iv.to_dict(), "normal_range": list(normal), "verdict": verdict.value,
        "model": "linear in hours since death; other curve shapes not fitted",
    }
    if iv.degenerate:
        rep.warn("zero residual spread: interval has zero width")
    rep.warn("normal range is a configurable serum convention")
    hi = float(max(fit.hours.max(), 1.0))
    ts = np.linspace(0.0, hi, 25)
    if not iv.degenerate:
        rep.add_series("extrapolation_band", ["t", "fit", "lower", "upper"], fit.band(ts, level))
    else:
        rep.add_series("extrapolation_band", ["t", "fit", "lower", "upper"],
                       [(float(t), float(fit.predict(t)), float(fit.predict(t)), float(fit.predict(t)))
                        for t in ts])
    cov = cfg.options.get("coverage")
    if cov:
        c = coverage_simulation(fit.intercept, fit.slope, fit.residual_sd or 0.0, fit.hours, level,
                                _seed(cfg), cov)
        rep.results["extrapolation"]["coverage"] = {
            "regenerations": cov, "new_observation": c.new_observation,
            "true_intercept": c.true_intercept, "mc_se": c.se(c.new_observation)}


def cmd_demo(cfg: RunConfig, rep: Report) -> None:
    """Noise, a damning chart, then the corrected analyses."""
    seed = cfg.seed if cfg.seed is not None else DEMO_SEED
    cp = read_ini(cfg.inputs.get("config") or fixture("ward.ini"))
    scen = scenario_from_ini(cp, seed)
    policy = policy_from_ini(cp)
    meta = [Nurse(n, EmploymentClass(v.split(",")[0].strip())) for n, v in cp.items("nurses")] \
        if cp.has_section("nurses") else []
    re = letby_chart_reenactment(scen, policy)
    flagged = replace(re.flagged, nurses=tuple({m.id: m for m in meta}.get(n.id, n) for n in re.flagged.nurses))
    full = RosterChart(flagged.nurses, tuple(sorted(re.flagged.events + re.complement.events,
                                                    key=lambda e: e.occurred_at)),
                       flagged.shift_exposure)
    base_only = replace(full, events=tuple(e for e in full.events if e.kind.value == "death"))
    target = scen.target
    chart_test = fisher_exact(build_table(flagged, target, re.schedule))
    full_test = fisher_exact(build_table(base_only, target, re.schedule))
    cal = coincidence_calibration(flagged, re.schedule, {"seed": seed}, _replicates(cfg), cfg.threads)
    dist = apply_selection(scen, policy, _replicates(cfg), cfg.threads)
    rep.results["demo"] = {
        "story": ["events generated with no culprit",
                  "events catalogued with suspicion depending on the target's presence",
                  "chart of flagged events tested as if it were the full record",
                  "top count calibrated against the maximum over nurses",
                  "full event record tested"],
        "target": target,
        "flagged_chart": {"events": len(flagged.events), "presence_counts": presence_counts(flagged),
                          "test": chart_test.to_dict()},
        "full_record": {"events": len(base_only.events), "test": full_test.to_dict()},
        "calibration": cal.to_dict(),
        "selection_simulation": dist.summary(),
        "pvalue_combination": {
            "inputs": [0.1] * 5,
            "fisher_method": {"p_value": combine_pvalues_fisher([0.1] * 5), "effect_size": None,
                              "effect_size_unavailable": True},
            "naive_product": combine_pvalues_naive_product([0.1] * 5).to_dict(),
        },
    }
    rep.warn(cal.warnings)
    rep.warn("naive product of p-values is not a p-value (invalid_as_p_value)")
    rep.provenance.extend(re.flagged.provenance)
    if cal.distribution is not None:
        d = cal.distribution
        rep.add_series("null_pmf", ["count", "pmf_specific", "pmf_max"],
                       zip(d.support.tolist(), d.pmf_specific.tolist(), d.pmf_max.tolist()))
    h = dist.histograms()
    rep.add_series("pvalue_histogram", ["bin_low", "bin_high", "full_count", "flagged_count"],
                   zip(h["edges"][:-1].tolist(), h["edges"][1:].tolist(), h["full"].tolist(),
                       h["flagged"].tolist()))
    rep.attachments["flagged.csv"] = dumps_chart(flagged)
    rep.attachments["complement.csv"] = dumps_chart(re.complement)
    rep.attachments["shifts.csv"] = dumps_schedule(re.schedule)


HANDLERS: dict[str, Callable[[RunConfig, Report], None]] = {
    "chart": cmd_chart, "test": cmd_test, "calibrate": cmd_calibrate, "bias": cmd_bias,
    "mortality": cmd_mortality, "timeline": cmd_timeline, "extrapolate": cmd_extrapolate,
    "demo": cmd_demo,
}


def build_report(cfg: RunConfig) -> Report:
    rep = Report(cfg.command, cfg.echo())
    HANDLERS[cfg.command](cfg, rep)
    return rep


def run(cfg: RunConfig, timestamp: str | None = None) -> tuple[dict, int]:
    """Execute ``cfg``; returns (report document or error object, exit status)."""
    try:
        if cfg.command == "demo" and cfg.seed is None:
            cfg = replace(cfg, seed=DEMO_SEED)
        rep = build_report(cfg)
        doc = rep.to_dict(timestamp)
        problems = lint(doc)
        if problems:
            raise AssertionError(f"bare p-values in report: {problems}")
        if cfg.out:
            out = Path(cfg.out)
            files = {"report.json": dumps(doc)}
            if cfg.format == "csv_bundle":
                files.update(emit_plot_series(doc))
            files.update(rep.attachments)
            clash = [n for n in files if (out / n).exists()]
            if clash and not cfg.force:
                raise ConfigError("output_exists",
                                  f"{out / clash[0]} exists; pass --force to overwrite")
            for name, text in files.items():
                write_atomic(out / name, text, force=cfg.force)
        return doc, 0
    except ConfigError as exc:
        return {"error": exc.code, "message": str(exc)}, 2
    except DomainError as exc:
        return {"error": exc.code, "message": str(exc)}, 1
    except (ChartError, CapacityError) as exc:
        return {"error": type(exc).__name__, "message": str(exc)}, 1
    except ValueError as exc:
        return {"error": "domain_error", "message": str(exc)}, 1


def replay(doc: dict | str, **overrides) -> tuple[dict, int]:
    """Re-run a report from its echoed configuration."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    return run(RunConfig.from_echo(doc["config"], **overrides))


# ---------------------------------------------------------------- argparse

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with scenario/policy/timeline blocks and [run] defaults")
    common.add_argument("--seed", type=int)
    common.add_argument("--replicates", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output directory; report goes to stdout when omitted")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("--format", choices=["json", "csv_bundle"])

    p = argparse.ArgumentParser(prog="roster-forensics", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def chart_args(sp, required_chart=False):
        sp.add_argument("--chart", required=required_chart)
        sp.add_argument("--chart-format", choices=["wide_csv", "event_list_csv"])
        sp.add_argument("--schedule")
        sp.add_argument("--remove", action="append", metavar="EVENT_ID")
        sp.add_argument("--remove-reason")

    sp = sub.add_parser("chart", parents=[common], help="load a roster chart and count presences")
    chart_args(sp, True)

    sp = sub.add_parser("test", parents=[common], help="exact 2x2 tests and p-value combination")
    chart_args(sp)
    sp.add_argument("--nurse")
    sp.add_argument("--sided", choices=["one", "two"])
    sp.add_argument("--table", action="append", nargs=4, type=int, metavar=("A", "B", "C", "D"))
    sp.add_argument("--pvalues", nargs="+", type=float)

    sp = sub.add_parser("calibrate", parents=[common], help="max-count calibration of the top nurse")
    chart_args(sp, True)
    sp.add_argument("--method", choices=["auto", "exact", "monte_carlo"])
    sp.add_argument("--assignment", choices=["uniform_without_replacement", "poisson_per_shift"])

    sp = sub.add_parser("bias", parents=[common], help="selection-bias simulation")
    sp.add_argument("--reenact", action="store_true", help="also write flagged.csv / complement.csv")

    sp = sub.add_parser("mortality", parents=[common], help="expected deaths and spike tails")
    sp.add_argument("--cohort")
    sp.add_argument("--observed", type=int)
    sp.add_argument("--model", choices=["poisson_binomial_exact", "poisson"])
    sp.add_argument("--rate", type=float)
    sp.add_argument("--rho", type=float, help="within-cluster shared vulnerability (Monte Carlo)")
    sp.add_argument("--units", type=int)
    sp.add_argument("--unit-tail", type=float)
    sp.add_argument("--curve")
    sp.add_argument("--covariate")
    sp.add_argument("--shift", type=float)

    sub.add_parser("timeline", parents=[common], help="death-time recording artifact")

    sp = sub.add_parser("extrapolate", parents=[common], help="concentration at death with prediction interval")
    sp.add_argument("--data")
    sp.add_argument("--level", type=float)
    sp.add_argument("--normal-range", nargs=2, type=float, metavar=("LOW", "HIGH"))
    sp.add_argument("--coverage", type=int, help="seeded regenerations for a coverage check")

    sub.add_parser("demo", parents=[common], help="end-to-end synthetic sharpshooter case")
    return p


INPUT_KEYS = ("config", "chart", "schedule", "cohort", "curve", "data")
OPTION_KEYS = {
    "chart_format": None, "remove": None, "remove_reason": None, "nurse": None, "method": None,
    "assignment": None, "reenact": None, "observed": None, "model": None, "rate": None, "rho": None,
    "units": None, "unit_tail": None, "covariate": None, "shift": None, "level": None,
    "normal_range": None, "coverage": None,
}


def config_from_args(argv: list[str] | None = None) -> RunConfig:
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise ConfigError("bad_arguments", "could not parse command line") from None
    file_run = {}
    if ns.config:
        cp = read_ini(ns.config)
        if cp.has_section("run"):
            file_run = dict(cp.items("run"))
    inputs = {k: getattr(ns, k) for k in INPUT_KEYS if getattr(ns, k, None)}
    for k in ("chart", "schedule", "cohort", "curve", "data"):
        if k not in inputs and file_run.get(k):
            inputs[k] = file_run[k]
    options = {}
    for k in OPTION_KEYS:
        v = getattr(ns, k, None)
        if v not in (None, False, []):
            options[k] = list(v) if isinstance(v, (list, tuple)) else v
    if getattr(ns, "sided", None):
        options["sided"] = Sided.ONE.value if ns.sided == "one" else Sided.TWO.value
    if getattr(ns, "table", None):
        options["tables"] = [list(t) for t in ns.table]
    if getattr(ns, "pvalues", None):
        options["pvalues"] = list(ns.pvalues)

    def pick(flag, key, conv):
        if flag is not None:
            return flag
        if key in file_run:
            try:
                return conv(file_run[key])
            except ValueError:
                raise ConfigError("bad_config", f"[run] {key}: cannot parse {file_run[key]!r}") from None
        return None

    seed = pick(ns.seed, "seed", int)
    if seed is None:
        try:
            seed = rngmod.resolve_seed(None)
        except ValueError:
            raise ConfigError("bad_seed", f"{rngmod.SEED_ENV} is not an integer") from None
    return RunConfig(
        command=ns.command, inputs=inputs, options=options, seed=seed,
        replicates=pick(ns.replicates, "replicates", int), out=pick(ns.out, "out", str),
        format=pick(ns.format, "format", str) or "json", force=ns.force,
        threads=pick(ns.threads, "threads", int) or 1,
    )


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        sys.stderr.write(json.dumps({"error": exc.code, "message": str(exc)}) + "\n")
        return 2
    doc, status = run(cfg)
    if status != 0:
        sys.stderr.write(json.dumps(doc) + "\n")
        return status
    if not cfg.out:
        sys.stdout.write(dumps(doc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
