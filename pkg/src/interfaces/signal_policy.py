"""
Signal Policy Interface

Defines the abstract base class every signal controller implements so the
evaluation loop can drive a learned agent and the baselines the same way.

Used by: expcli.runner, agent.dqn
Implemented by: GreedyQPolicy, FixedTimePolicy, RandomPolicy
"""

from abc import ABC, abstractmethod
from typing import FrozenSet

from simsignal import Action, Observation


# ============================================================================
# ABSTRACT BASE CLASS
# ============================================================================

class SignalPolicy(ABC):
    """
    Abstract base class for all signal controllers.
    """

    name: str = "UNKNOWN"
    """Identifier written to logs and result files"""

    def reset(self, seed: int = 0) -> None:
        """Clear per-episode state before a new scenario."""
        pass

    @abstractmethod
    def act(self, observation: Observation, valid_actions: FrozenSet[Action]) -> Action:
        """
        Choose the action for the next second.

        Args:
            observation: Current simulator observation
            valid_actions: Actions the simulator will accept now

        Returns:
            One member of valid_actions
        """
        pass
