"""
scenario/generator.py

Vehicle-level scenario generation from phase volumes.

Departure times are drawn i.i.d. uniform on [0, duration) from a numpy
Generator seeded by the caller, so every scenario is a pure function of
(counts, duration, seed).
"""

import logging
from typing import Optional

import numpy as np

from scenario.models import DEFAULT_DURATION_S, Scenario, Vehicle
from shiftcore import PHASES, PhaseCounts

logger = logging.getLogger(__name__)


def _sorted_vehicles(ids: np.ndarray, phases: np.ndarray, departs: np.ndarray) -> tuple:
    # ties on departure time fall back to vehicle id
    order = np.lexsort((ids, departs))
    return tuple(
        Vehicle(id=int(ids[i]), phase=int(phases[i]), scheduled_depart_s=float(departs[i]))
        for i in order
    )


def generate_scenario(
    counts: PhaseCounts,
    duration_s: float = DEFAULT_DURATION_S,
    seed: int = 0,
    label: Optional[str] = None,
    target_ks: Optional[float] = None,
) -> Scenario:
    """
    Build a scenario with exactly counts(i) vehicles on each phase i.

    Vehicle ids are assigned phase by phase (phase 1 first) before sorting,
    so an id identifies the same movement across reseeded copies.
    """
    if duration_s <= 0:
        raise ValueError(f"duration_s must be > 0, got {duration_s}")

    phases = np.repeat(np.asarray(PHASES, dtype=np.int64), np.asarray(counts.counts, dtype=np.int64))
    ids = np.arange(phases.size, dtype=np.int64)
    rng = np.random.default_rng(seed)
    departs = rng.uniform(0.0, duration_s, size=phases.size)
    # uniform() is half-open in theory; guard the float edge
    departs = np.minimum(departs, np.nextafter(duration_s, 0.0))

    scenario = Scenario(
        label=label or f"counts_{counts.total}_seed_{seed}",
        duration_s=float(duration_s),
        vehicles=_sorted_vehicles(ids, phases, departs),
        seed=int(seed),
        target_ks=target_ks,
    )
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug(f"generate_scenario(): {scenario.label} with {scenario.total} vehicles")
    return scenario


def shuffle_departures(scenario: Scenario, seed: int, label: Optional[str] = None) -> Scenario:
    """Redraw every departure time; vehicles and their phases are kept."""
    by_id = sorted(scenario.vehicles, key=lambda v: v.id)
    ids = np.asarray([v.id for v in by_id], dtype=np.int64)
    phases = np.asarray([v.phase for v in by_id], dtype=np.int64)
    rng = np.random.default_rng(seed)
    departs = rng.uniform(0.0, scenario.duration_s, size=ids.size)
    departs = np.minimum(departs, np.nextafter(scenario.duration_s, 0.0))

    return Scenario(
        label=label or f"{scenario.label}_shuffle_{seed}",
        duration_s=scenario.duration_s,
        vehicles=_sorted_vehicles(ids, phases, departs),
        seed=int(seed),
        target_ks=scenario.target_ks,
    )
