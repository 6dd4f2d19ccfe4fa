"""
agent/replay_buffer.py

Fixed-capacity ring of transitions, stored column-wise in numpy arrays.

Each entry also keeps the valid-action mask of the next state, so TD targets
only bootstrap from actions the simulator would have accepted.
"""

from dataclasses import dataclass

import numpy as np

from simsignal import NUM_ACTIONS


@dataclass(frozen=True)
class TransitionBatch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    next_masks: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


class ReplayBuffer:
    """
    Uniform experience replay.

    Parameters
    ----------
    capacity : int
        Maximum stored transitions; the oldest is overwritten when full.
    state_width : int
        Width of an encoded observation.
    """

    def __init__(self, capacity: int, state_width: int, num_actions: int = NUM_ACTIONS):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_width))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_width))
        self.dones = np.zeros(capacity, dtype=bool)
        self.next_masks = np.zeros((capacity, num_actions), dtype=bool)
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(
        self,
        state: np.ndarray,
        action: int,
        reward: float,
        next_state: np.ndarray,
        done: bool,
        next_mask: np.ndarray,
    ) -> None:
        i = self._cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = done
        self.next_masks[i] = next_mask
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """Uniform sample without replacement within the batch."""
        if batch_size > self._size:
            raise ValueError(f"Cannot sample {batch_size} transitions from a buffer of {self._size}")
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return TransitionBatch(
            states=self.states[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            next_states=self.next_states[idx],
            dones=self.dones[idx],
            next_masks=self.next_masks[idx],
        )
