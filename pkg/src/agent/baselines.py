"""
agent/baselines.py

Reference controllers: fixed-time cycle, uniform random, and the greedy
policy of a trained Q-network.
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple, Union

import numpy as np

from errors import InvalidPlan
from interfaces import SignalPolicy
from agent.dqn import select_action
from agent.qnetwork import QNetwork
from shiftcore import PHASES
from simsignal import Action, Observation, SignalColor, action_for_pair

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlanEntry:
    action: Action
    split_s: float


DEFAULT_SPLIT_S: float = 15.0
# one through/left pair per approach
DEFAULT_CYCLE_PAIRS: Tuple[Tuple[int, int], ...] = ((1, 5), (2, 6), (3, 7), (4, 8))


class FixedTimePolicy(SignalPolicy):
    """
    Cycle through a plan of (action, green split) entries regardless of traffic.

    Each entry keeps its pair green for `split_s` seconds, counted from the
    second the last of its phases turned green. While the simulator only
    accepts one action (transition or minimum green), that action is held.
    """

    name = "fixed_time"

    def __init__(self, plan: Optional[Iterable[Tuple[Union[Action, Tuple[int, int]], float]]] = None):
        if plan is None:
            plan = [(pair, DEFAULT_SPLIT_S) for pair in DEFAULT_CYCLE_PAIRS]
        entries = []
        for action, split in plan:
            if not isinstance(action, Action):
                action = action_for_pair(action)
            if split <= 0:
                raise InvalidPlan(f"Split for {action} must be positive, got {split}")
            entries.append(PlanEntry(action, float(split)))
        if not entries:
            raise InvalidPlan("Fixed-time plan is empty")
        served = frozenset().union(*(e.action.phases for e in entries))
        missing = sorted(set(PHASES) - served)
        if missing:
            raise InvalidPlan(f"Fixed-time plan never serves phases {missing}")
        self.plan: Tuple[PlanEntry, ...] = tuple(entries)
        self._index = 0
        logger.debug(f"Fixed-time plan: {[(str(e.action), e.split_s) for e in self.plan]}")

    def period_s(self, transition_s: float) -> float:
        """Cycle length when every entry is followed by a switch transition."""
        return sum(e.split_s for e in self.plan) + len(self.plan) * transition_s

    def reset(self, seed: int = 0) -> None:
        self._index = 0

    def act(self, observation: Observation, valid_actions: FrozenSet[Action]) -> Action:
        desired = self.plan[self._index]
        colors = observation.color_code
        phases_green = all(colors[p - 1] == SignalColor.GREEN for p in desired.action.phases)
        if phases_green:
            green_for = min(observation.elapsed_in_color_s[p - 1] for p in desired.action.phases)
            if green_for >= desired.split_s:
                self._index = (self._index + 1) % len(self.plan)
                desired = self.plan[self._index]
        if desired.action in valid_actions:
            return desired.action
        # hold the only action the signal accepts right now
        return min(valid_actions)


class RandomPolicy(SignalPolicy):
    """Uniform choice among the valid actions."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def reset(self, seed: int = 0) -> None:
        self.rng = np.random.default_rng(seed)

    def act(self, observation: Observation, valid_actions: FrozenSet[Action]) -> Action:
        choices = sorted(valid_actions)
        return choices[int(self.rng.integers(len(choices)))]


class GreedyQPolicy(SignalPolicy):
    """Masked argmax of a frozen Q-network."""

    name = "dqn"

    def __init__(self, network: QNetwork, elapsed_clip_s: float = 120.0):
        self.network = network
        self.elapsed_clip_s = elapsed_clip_s
        self._rng = np.random.default_rng(0)

    def act(self, observation: Observation, valid_actions: FrozenSet[Action]) -> Action:
        return select_action(self.network, observation, valid_actions, 0.0, self._rng, self.elapsed_clip_s)


POLICY_NAMES: Tuple[str, ...] = ("dqn", "fixed_time", "random")
