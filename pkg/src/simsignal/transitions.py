"""
simsignal/transitions.py

Timed color programs for switching between actions.

Phases leaving green show yellow, then all-red clearance; phases entering
green wait at red until the clearance ends. A phase shared by both actions
stays green throughout.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

from simsignal.phases import Action, SignalColor
from shiftcore import PHASES


@dataclass(frozen=True)
class TransitionStage:
    duration_s: int
    colors: Tuple[SignalColor, ...]


@dataclass(frozen=True)
class TransitionProgram:
    """Stages to play in order, then `final_colors` with `to_action` green."""
    from_action: Optional[Action]
    to_action: Action
    stages: Tuple[TransitionStage, ...]
    final_colors: Tuple[SignalColor, ...]

    @property
    def total_s(self) -> int:
        return sum(stage.duration_s for stage in self.stages)


def green_colors(action: Action) -> Tuple[SignalColor, ...]:
    return tuple(SignalColor.GREEN if p in action.phases else SignalColor.RED for p in PHASES)


def switch_transition(
    from_action: Action,
    to_action: Action,
    yellow_s: int = 3,
    all_red_s: int = 1,
) -> TransitionProgram:
    """Program taking the signal from `from_action` green to `to_action` green."""
    final = green_colors(to_action)
    if from_action == to_action:
        return TransitionProgram(from_action, to_action, (), final)

    shared = from_action.phases & to_action.phases
    leaving = from_action.phases - shared

    def stage_colors(leaving_color: SignalColor) -> Tuple[SignalColor, ...]:
        return tuple(
            SignalColor.GREEN if p in shared
            else leaving_color if p in leaving
            else SignalColor.RED
            for p in PHASES
        )

    stages = (
        TransitionStage(yellow_s, stage_colors(SignalColor.YELLOW)),
        TransitionStage(all_red_s, stage_colors(SignalColor.ALL_RED_CLEARANCE)),
    )
    return TransitionProgram(from_action, to_action, stages, final)


def startup_transition(to_action: Action, all_red_s: int = 1) -> TransitionProgram:
    """All-red start of an episode, then `to_action` green."""
    stage = TransitionStage(all_red_s, tuple(SignalColor.ALL_RED_CLEARANCE for _ in PHASES))
    return TransitionProgram(None, to_action, (stage,), green_colors(to_action))
