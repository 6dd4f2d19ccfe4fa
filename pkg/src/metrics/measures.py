"""
metrics/measures.py

Per-vehicle travel measures and their per-scenario aggregate.

For every crossed vehicle:
    extended travel time = arrival - scheduled departure
                         = departure delay + travel time
    travel time          = arrival - actual departure
    intersection delay   = max(0, travel time on the approach - free-flow time)

Timed-out vehicles count as generated but not crossed, and are left out of
the time means.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from errors import EmptyLog, NotArrived, ZeroGenerated
from simsignal import VehicleEvent

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsReport:
    """
    Scenario-level performance.

    Time means are NaN when no vehicle crossed.
    """
    normalized_throughput: float
    mean_extended_travel_time_s: float
    mean_travel_time_s: float
    mean_delay_s: float
    vehicles_generated: int
    vehicles_crossed: int
    timed_out: int

    @property
    def mean_departure_delay_s(self) -> float:
        return self.mean_extended_travel_time_s - self.mean_travel_time_s


def _require_arrival(v: VehicleEvent) -> None:
    if v.arrival_s is None or v.actual_depart_s is None:
        raise NotArrived(f"Vehicle {v.vehicle_id} has no recorded arrival")


def extended_travel_time(v: VehicleEvent) -> float:
    _require_arrival(v)
    return v.arrival_s - v.scheduled_depart_s


def travel_time(v: VehicleEvent) -> float:
    _require_arrival(v)
    return v.arrival_s - v.actual_depart_s


def departure_delay(v: VehicleEvent) -> float:
    _require_arrival(v)
    return v.actual_depart_s - v.scheduled_depart_s


def intersection_delay(v: VehicleEvent, free_flow_s: float) -> float:
    """Approach time beyond free flow; approach entry is the actual departure."""
    if free_flow_s < 0:
        raise ValueError(f"free_flow_s must be >= 0, got {free_flow_s}")
    return max(0.0, travel_time(v) - free_flow_s)


def normalized_throughput(events: Iterable[VehicleEvent], generated: int) -> float:
    """Share of the generated vehicles that crossed before the timeout."""
    if generated < 1:
        raise ZeroGenerated("normalized_throughput() needs at least one generated vehicle")
    crossed = sum(1 for v in events if v.crossed)
    return crossed / generated


def aggregate(
    events: Sequence[VehicleEvent],
    free_flow_s: float = 10.0,
    generated: Optional[int] = None,
) -> MetricsReport:
    """
    Collapse one scenario's event log into a MetricsReport.

    `generated` defaults to the number of events in the log.

    Raises
    ------
    EmptyLog
        If the log holds no events.
    """
    if not events:
        raise EmptyLog("aggregate() needs at least one vehicle event")
    generated = len(events) if generated is None else generated

    crossed = [v for v in events if v.crossed]
    timed_out = sum(1 for v in events if v.timed_out)
    if crossed:
        ett = float(np.mean([extended_travel_time(v) for v in crossed]))
        tt = float(np.mean([travel_time(v) for v in crossed]))
        delay = float(np.mean([intersection_delay(v, free_flow_s) for v in crossed]))
    else:
        ett = tt = delay = float("nan")
        logger.warning(f"No vehicle crossed out of {generated}; time means are NaN")

    return MetricsReport(
        normalized_throughput=normalized_throughput(events, generated),
        mean_extended_travel_time_s=ett,
        mean_travel_time_s=tt,
        mean_delay_s=delay,
        vehicles_generated=generated,
        vehicles_crossed=len(crossed),
        timed_out=timed_out,
    )
