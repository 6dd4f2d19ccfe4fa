"""Signalized-intersection simulator: NEMA phases, transitions, the 1 s environment."""

from simsignal.phases import (
    ACTIONS,
    COMPATIBLE_PAIRS,
    NUM_ACTIONS,
    NUM_COLORS,
    Action,
    SignalColor,
    action_for_index,
    action_for_pair,
    greens_compatible,
)
from simsignal.transitions import TransitionProgram, TransitionStage, startup_transition, switch_transition
from simsignal.intersection import (
    EVENT_LOG_HEADER,
    OBSERVATION_WIDTH,
    IntersectionSimulator,
    MetricsSnapshot,
    Observation,
    SignalState,
    VehicleEvent,
    encode_observation,
    write_event_log,
)

__all__ = [
    "ACTIONS",
    "COMPATIBLE_PAIRS",
    "NUM_ACTIONS",
    "NUM_COLORS",
    "Action",
    "SignalColor",
    "action_for_index",
    "action_for_pair",
    "greens_compatible",
    "TransitionProgram",
    "TransitionStage",
    "startup_transition",
    "switch_transition",
    "EVENT_LOG_HEADER",
    "OBSERVATION_WIDTH",
    "IntersectionSimulator",
    "MetricsSnapshot",
    "Observation",
    "SignalState",
    "VehicleEvent",
    "encode_observation",
    "write_event_log",
]
