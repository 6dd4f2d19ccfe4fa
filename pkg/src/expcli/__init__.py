"""Experiment runner: sweeps, results, plots, trend fits and the shift alarm."""

from expcli.experiment import ExperimentKind, ExperimentSpec
from expcli.analysis import (
    AlarmResult,
    NonlinearityRow,
    TrendFit,
    fit_trend,
    ks_nonlinearity_report,
    sensitivity_summary,
    shift_alarm,
    trend_table,
)
from expcli.runner import (
    ExperimentOutcome,
    TrainingData,
    evaluate_scenario,
    load_training_data,
    run_experiment,
    training_scenarios,
)

__all__ = [
    "ExperimentKind",
    "ExperimentSpec",
    "AlarmResult",
    "NonlinearityRow",
    "TrendFit",
    "fit_trend",
    "ks_nonlinearity_report",
    "sensitivity_summary",
    "shift_alarm",
    "trend_table",
    "ExperimentOutcome",
    "TrainingData",
    "evaluate_scenario",
    "load_training_data",
    "run_experiment",
    "training_scenarios",
]
