"""
simsignal/intersection.py

IntersectionSimulator - discrete-time (1 s) model of one signalized 4-leg
intersection with one lane per NEMA phase.

Per step, in order:
  1. Apply the agent's action (start a transition if it changes the pair)
  2. Scheduled vehicles join their phase's departure backlog
  3. Each approach admits up to `saturation_rate` backlog vehicles while its
     lane holds no more than `max_approach_vehicles`; a vehicle admitted after
     its scheduled second accrues departure delay
  4. Admitted vehicles drive `free_flow_s` to the stop line
  5. Green phases past their startup lost time discharge up to
     `saturation_rate` stopped vehicles; the reward is the number discharged
  6. Advance the clock and the transition program
  7. Check conservation, green compatibility and timestamp ordering

An instance is single-threaded and stateful. Independent instances may run
in parallel, one per scenario.
"""

import csv
import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Deque, Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np

from config import SimulatorConfig
from errors import InvalidAction, SimulationInvariantError
from scenario import Scenario
from shiftcore import NUM_PHASES, PHASES
from simsignal.phases import (
    ACTIONS,
    NUM_COLORS,
    Action,
    SignalColor,
    action_for_pair,
    greens_compatible,
)
from simsignal.transitions import TransitionProgram, startup_transition, switch_transition

logger = logging.getLogger(__name__)

EVENT_LOG_HEADER = ("vehicle_id", "phase", "scheduled_s", "actual_depart_s", "arrival_s")


# ---------------------------------------------------------------------------
# Data structures
# ---------------------------------------------------------------------------

@dataclass
class VehicleEvent:
    """
    Timestamps of one vehicle's trip.

    Fields
    ------
    scheduled_depart_s : float
        Departure time requested by the scenario.
    actual_depart_s : float, optional
        When the vehicle entered its approach; later than scheduled when the
        approach was full.
    arrival_s : float, optional
        When the vehicle crossed the stop line.
    timed_out : bool
        True when the episode hit its hard timeout before the vehicle crossed;
        arrival is then the timeout instant.
    """
    vehicle_id: int
    phase: int
    scheduled_depart_s: float
    actual_depart_s: Optional[float] = None
    arrival_s: Optional[float] = None
    timed_out: bool = False

    @property
    def crossed(self) -> bool:
        return self.arrival_s is not None and not self.timed_out


@dataclass(frozen=True)
class SignalState:
    """Colors and elapsed-in-color per phase, plus the active or pending action."""
    colors: Tuple[SignalColor, ...]
    elapsed_in_color_s: Tuple[float, ...]
    active_action: Optional[Action]
    pending_action: Optional[Action]

    @property
    def in_transition(self) -> bool:
        return self.pending_action is not None

    @property
    def green_phases(self) -> FrozenSet[int]:
        return frozenset(p for p, c in zip(PHASES, self.colors) if c is SignalColor.GREEN)


@dataclass(frozen=True)
class Observation:
    """What the agent sees each second."""
    detected_vehicles: Tuple[int, ...]
    color_code: Tuple[int, ...]
    elapsed_in_color_s: Tuple[float, ...]


@dataclass(frozen=True)
class MetricsSnapshot:
    """Running counters returned as `info` from every step."""
    time_s: int
    generated: int
    entered: int
    crossed: int
    queued: int
    backlog: int
    timed_out: int


OBSERVATION_WIDTH: int = NUM_PHASES * (2 + NUM_COLORS)


def encode_observation(obs: Observation, elapsed_clip_s: float = 120.0) -> np.ndarray:
    """
    Network input: detected counts, one-hot colors, elapsed seconds clipped
    at `elapsed_clip_s` and scaled to [0, 1].
    """
    detected = np.asarray(obs.detected_vehicles, dtype=float)
    one_hot = np.zeros((NUM_PHASES, NUM_COLORS))
    one_hot[np.arange(NUM_PHASES), np.asarray(obs.color_code, dtype=int)] = 1.0
    elapsed = np.clip(np.asarray(obs.elapsed_in_color_s, dtype=float), 0.0, elapsed_clip_s) / elapsed_clip_s
    return np.concatenate([detected, one_hot.ravel(), elapsed])


# ---------------------------------------------------------------------------
# Simulator
# ---------------------------------------------------------------------------

class IntersectionSimulator:
    """
    Single-intersection environment with the reset/step contract.

    Parameters
    ----------
    config : SimulatorConfig
        Signal timings and geometry. Defaults to SimulatorConfig().
    check_invariants : bool
        Verify conservation, safety and timestamp ordering every step.
    """

    def __init__(self, config: Optional[SimulatorConfig] = None, check_invariants: bool = True) -> None:
        self.config = config or SimulatorConfig()
        self.check_invariants = check_invariants
        self.default_action = action_for_pair(self.config.default_action)
        self.free_flow_s = self.config.free_flow_s
        self.scenario: Optional[Scenario] = None
        self.seed: Optional[int] = None

    # -- lifecycle ---------------------------------------------------------

    def reset(self, scenario: Scenario, seed: int = 0) -> Observation:
        """Start a fresh episode: empty lanes, all-red, then the default action."""
        self.scenario = scenario
        self.seed = seed
        self._t = 0
        self._timeout_s = int(np.ceil(scenario.duration_s)) + self.config.timeout_extra_s

        self._events: Dict[int, VehicleEvent] = {
            v.id: VehicleEvent(v.id, v.phase, v.scheduled_depart_s) for v in scenario.vehicles
        }
        self._schedule = scenario.vehicles
        self._next_scheduled = 0
        self._backlog: Dict[int, Deque[VehicleEvent]] = {p: deque() for p in PHASES}
        # (stop-line arrival time, event), FIFO per lane
        self._lanes: Dict[int, Deque[Tuple[float, VehicleEvent]]] = {p: deque() for p in PHASES}
        self._entered = 0
        self._crossed = 0
        self._timed_out = 0
        self._done = False

        self._colors: List[SignalColor] = [SignalColor.ALL_RED_CLEARANCE] * NUM_PHASES
        self._color_since: List[int] = [0] * NUM_PHASES
        self._active: Optional[Action] = None
        self._green_since = 0
        self._start_program(startup_transition(self.default_action, self.config.all_red_s))

        logger.debug(f"reset(): scenario '{scenario.label}' with {scenario.total} vehicles, seed {seed}")
        return self.observe()

    @property
    def time_s(self) -> int:
        return self._t

    @property
    def done(self) -> bool:
        return self._done

    # -- signal control ----------------------------------------------------

    def signal_state(self) -> SignalState:
        return SignalState(
            colors=tuple(self._colors),
            elapsed_in_color_s=tuple(float(self._t - s) for s in self._color_since),
            active_action=self._active,
            pending_action=self._program.to_action if self._program else None,
        )

    def valid_actions(self) -> FrozenSet[Action]:
        """
        Actions the agent may choose now: only the pending action during a
        transition, only the current action before minimum green, only the
        actions serving a starved phase once one has waited `max_wait_s`,
        else all.
        """
        if self._program is not None:
            return frozenset({self._program.to_action})
        if self._t - self._green_since < self.config.min_green_s:
            return frozenset({self._active})
        starved = self.starved_phase()
        if starved is not None:
            return frozenset(a for a in ACTIONS if starved in a.phases)
        return frozenset(ACTIONS)

    def starved_phase(self) -> Optional[int]:
        """
        Longest-red phase with a stopped vehicle, once its red has lasted
        `max_wait_s`; ties go to the lowest phase. None when no phase qualifies.
        """
        limit = self.config.max_wait_s
        if limit is None:
            return None
        t = float(self._t)
        starved, longest = None, limit - 1
        for i, phase in enumerate(PHASES):
            if self._colors[i] is not SignalColor.RED:
                continue
            lane = self._lanes[phase]
            if not lane or lane[0][0] > t:
                continue
            waited = self._t - self._color_since[i]
            if waited > longest:
                starved, longest = phase, waited
        return starved

    def _start_program(self, program: TransitionProgram) -> None:
        self._program = program
        self._stage_index = 0
        self._stage_started = self._t
        self._apply_colors(program.stages[0].colors)

    def _apply_colors(self, colors) -> None:
        for i, color in enumerate(colors):
            if self._colors[i] is not color:
                self._colors[i] = color
                self._color_since[i] = self._t

    def _advance_program(self) -> None:
        program = self._program
        if program is None:
            return
        if self._t - self._stage_started < program.stages[self._stage_index].duration_s:
            return
        self._stage_index += 1
        self._stage_started = self._t
        if self._stage_index < len(program.stages):
            self._apply_colors(program.stages[self._stage_index].colors)
            return
        self._apply_colors(program.final_colors)
        # a phase kept green across the switch keeps its green clock
        self._active = program.to_action
        self._green_since = self._t
        self._program = None

    # -- traffic -----------------------------------------------------------

    def _release_scheduled(self, horizon: float) -> None:
        schedule = self._schedule
        while self._next_scheduled < len(schedule) and schedule[self._next_scheduled].scheduled_depart_s < horizon:
            vehicle = schedule[self._next_scheduled]
            self._backlog[vehicle.phase].append(self._events[vehicle.id])
            self._next_scheduled += 1

    def _admit(self) -> None:
        t = float(self._t)
        for phase in PHASES:
            backlog = self._backlog[phase]
            lane = self._lanes[phase]
            admitted = 0
            while backlog and admitted < self.config.saturation_rate and len(lane) <= self.config.max_approach_vehicles:
                event = backlog.popleft()
                event.actual_depart_s = max(event.scheduled_depart_s, t)
                lane.append((event.actual_depart_s + self.free_flow_s, event))
                admitted += 1
                self._entered += 1

    def _discharge(self) -> int:
        t = float(self._t)
        horizon = t + 1.0
        crossed = 0
        for i, phase in enumerate(PHASES):
            if self._colors[i] is not SignalColor.GREEN:
                continue
            if self._t - self._color_since[i] < self.config.startup_lost_s:
                continue
            lane = self._lanes[phase]
            served = 0
            while lane and served < self.config.saturation_rate and lane[0][0] <= horizon:
                stop_line_s, event = lane.popleft()
                event.arrival_s = max(stop_line_s, t)
                if self.check_invariants and not (
                    event.scheduled_depart_s <= event.actual_depart_s
                    and event.actual_depart_s + self.free_flow_s <= event.arrival_s + 1e-9
                ):
                    raise SimulationInvariantError(
                        f"Vehicle {event.vehicle_id} timestamps out of order: scheduled "
                        f"{event.scheduled_depart_s}, entered {event.actual_depart_s}, crossed {event.arrival_s}"
                    )
                served += 1
            crossed += served
        self._crossed += crossed
        return crossed

    # -- step --------------------------------------------------------------

    def step(self, action: Action) -> Tuple[Observation, float, bool, MetricsSnapshot]:
        """
        Advance the simulation by one second under `action`.

        Raises
        ------
        InvalidAction
            If `action` is not in valid_actions(); the agent failed to mask.
        """
        if self._done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        if action not in self.valid_actions():
            raise InvalidAction(
                f"Action {action} not valid at t={self._t}; valid: {sorted(str(a) for a in self.valid_actions())}"
            )
        if self._program is None and action != self._active:
            self._start_program(
                switch_transition(self._active, action, self.config.yellow_s, self.config.all_red_s)
            )

        self._release_scheduled(self._t + 1.0)
        self._admit()
        reward = self._discharge()

        self._t += 1
        self._advance_program()

        if self.check_invariants:
            self._check_invariants()

        if self._t >= self.scenario.duration_s and self._crossed == self.scenario.total:
            self._done = True
        elif self._t >= self._timeout_s:
            self._expire()
            self._done = True

        return self.observe(), float(reward), self._done, self.snapshot()

    def _expire(self) -> None:
        """Record every unserved vehicle as timed out at the hard timeout."""
        self._release_scheduled(float("inf"))
        timeout = float(self._timeout_s)
        for event in self._events.values():
            if event.arrival_s is None:
                if event.actual_depart_s is None:
                    event.actual_depart_s = timeout
                event.arrival_s = timeout
                event.timed_out = True
                self._timed_out += 1
        for phase in PHASES:
            self._backlog[phase].clear()
            self._lanes[phase].clear()
        logger.warning(
            f"Scenario '{self.scenario.label}' hit the hard timeout at {timeout:.0f}s "
            f"with {self._timed_out} vehicles unserved"
        )

    def _check_invariants(self) -> None:
        queued = sum(len(lane) for lane in self._lanes.values())
        if self._entered != self._crossed + queued:
            raise SimulationInvariantError(
                f"Conservation violated at t={self._t}: entered={self._entered}, "
                f"crossed={self._crossed}, queued={queued}"
            )
        greens = [p for p, c in zip(PHASES, self._colors) if c is SignalColor.GREEN]
        if not greens_compatible(greens):
            raise SimulationInvariantError(f"Incompatible greens {greens} at t={self._t}")

    # -- observation -------------------------------------------------------

    def observe(self) -> Observation:
        """Stopped vehicles per phase (capped at detection capacity), colors, elapsed."""
        t = float(self._t)
        detected = []
        for phase in PHASES:
            stopped = 0
            for stop_line_s, _ in self._lanes[phase]:
                if stop_line_s > t or stopped >= self.config.detection_capacity:
                    break
                stopped += 1
            detected.append(stopped)
        return Observation(
            detected_vehicles=tuple(detected),
            color_code=tuple(int(c) for c in self._colors),
            elapsed_in_color_s=tuple(float(self._t - s) for s in self._color_since),
        )

    def queue_lengths(self) -> Tuple[int, ...]:
        """Vehicles on each approach lane, moving or stopped."""
        return tuple(len(self._lanes[p]) for p in PHASES)

    def snapshot(self) -> MetricsSnapshot:
        return MetricsSnapshot(
            time_s=self._t,
            generated=self.scenario.total,
            entered=self._entered,
            crossed=self._crossed,
            queued=sum(len(lane) for lane in self._lanes.values()),
            backlog=sum(len(b) for b in self._backlog.values()) + len(self._schedule) - self._next_scheduled,
            timed_out=self._timed_out,
        )

    def event_log(self) -> List[VehicleEvent]:
        """Per-vehicle timestamps, ordered by vehicle id."""
        return [self._events[k] for k in sorted(self._events)]


def write_event_log(events: List[VehicleEvent], path: Union[str, Path]) -> Path:
    """Write `vehicle_id,phase,scheduled_s,actual_depart_s,arrival_s` rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def fmt(value: Optional[float]) -> str:
        return "" if value is None else f"{value:.6f}"

    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(EVENT_LOG_HEADER)
        for e in events:
            writer.writerow([e.vehicle_id, e.phase, fmt(e.scheduled_depart_s), fmt(e.actual_depart_s), fmt(e.arrival_s)])
    return path
