"""Scenario construction: turn-count ingestion, departure sampling, synthetic shift."""

from scenario.models import (
    DEFAULT_DURATION_S,
    Scenario,
    ScenarioDocument,
    Vehicle,
    load_scenario,
    save_scenario,
)
from scenario.ingest import TurnCountRecord, ingest_turn_counts, parse_turn_counts
from scenario.generator import generate_scenario, shuffle_departures
from scenario.perturbation import (
    PerturbationMode,
    build_experiment_grid,
    cell_label,
    perturb_to_ks,
    scale_volume,
)

__all__ = [
    "DEFAULT_DURATION_S",
    "Scenario",
    "ScenarioDocument",
    "Vehicle",
    "load_scenario",
    "save_scenario",
    "TurnCountRecord",
    "ingest_turn_counts",
    "parse_turn_counts",
    "generate_scenario",
    "shuffle_departures",
    "PerturbationMode",
    "build_experiment_grid",
    "cell_label",
    "perturb_to_ks",
    "scale_volume",
]
