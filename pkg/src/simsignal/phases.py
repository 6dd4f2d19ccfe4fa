"""
simsignal/phases.py

NEMA phase pairs, signal colors and the compatibility table.

A standard 4-leg intersection has 8 NEMA phases. Exactly 8 pairs of them can
be green together; each pair is one agent action.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import FrozenSet, Iterable, Tuple

from errors import InvalidAction


COMPATIBLE_PAIRS: Tuple[Tuple[int, int], ...] = (
    (1, 5), (1, 6), (2, 5), (2, 6), (3, 7), (3, 8), (4, 7), (4, 8),
)


class SignalColor(IntEnum):
    """Per-phase signal color; the integer value is the observation code."""
    GREEN = 0
    YELLOW = 1
    ALL_RED_CLEARANCE = 2
    RED = 3


NUM_COLORS: int = len(SignalColor)


@dataclass(frozen=True, order=True)
class Action:
    """Serve one compatible pair of phases."""
    index: int
    pair: Tuple[int, int]

    @property
    def phases(self) -> FrozenSet[int]:
        return frozenset(self.pair)

    def __str__(self) -> str:
        return f"({self.pair[0]},{self.pair[1]})"


ACTIONS: Tuple[Action, ...] = tuple(Action(i, pair) for i, pair in enumerate(COMPATIBLE_PAIRS))
NUM_ACTIONS: int = len(ACTIONS)

_BY_PAIR = {a.pair: a for a in ACTIONS}


def action_for_pair(pair: Iterable[int]) -> Action:
    """Look up the action serving a phase pair, in either order."""
    key = tuple(sorted(int(p) for p in pair))
    try:
        return _BY_PAIR[key]
    except KeyError:
        raise InvalidAction(f"{key} is not a compatible phase pair") from None


def action_for_index(index: int) -> Action:
    if not 0 <= index < NUM_ACTIONS:
        raise InvalidAction(f"Action index {index} outside 0..{NUM_ACTIONS - 1}")
    return ACTIONS[index]


def greens_compatible(green_phases: Iterable[int]) -> bool:
    """True when the green phases are a subset of a single compatible pair."""
    greens = frozenset(green_phases)
    if len(greens) <= 1:
        return True
    return any(greens <= a.phases for a in ACTIONS)
