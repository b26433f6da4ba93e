"""Statistics of roster-based evidence against nurses: exact tests, null models,
selection-bias and recording-artifact simulators, expected mortality and
postmortem back-extrapolation."""

__version__ = "0.1.0"

from .association import (Assoc2x2, Sided, TestResult, build_table, combine_pvalues_fisher,
                          combine_pvalues_naive_product, fisher_exact)
from .bias_sim import SelectionPolicy, apply_selection, letby_chart_reenactment
from .extrapolation import (concentration_at_death_interval, exclusion_verdict, fit_decay,
                            t_quantile)
from .mortality import (MortalityCohort, RiskCurve, acuity_shift, excess_and_multiple_testing,
                        expected_mortality, spike_tail)
from .null_models import (WardScenario, coincidence_calibration, exact_max_distribution,
                          simulate_null)
from .roster import (Nurse, RosterChart, Schedule, Shift, load_chart, load_schedule,
                     presence_counts, remove_event, save_chart)
from .timeline import (ClockWindow, RecordingRegime, attribution_table, simulate_ward_deaths)

__all__ = [
    "Assoc2x2", "Sided", "TestResult", "build_table", "combine_pvalues_fisher",
    "combine_pvalues_naive_product", "fisher_exact", "SelectionPolicy", "apply_selection",
    "letby_chart_reenactment", "concentration_at_death_interval", "exclusion_verdict",
    "fit_decay", "t_quantile", "MortalityCohort", "RiskCurve", "acuity_shift",
    "excess_and_multiple_testing", "expected_mortality", "spike_tail", "WardScenario",
    "coincidence_calibration", "exact_max_distribution", "simulate_null", "Nurse",
    "RosterChart", "Schedule", "Shift", "load_chart", "load_schedule", "presence_counts",
    "remove_event", "save_chart", "ClockWindow", "RecordingRegime", "attribution_table",
    "simulate_ward_deaths",
]
