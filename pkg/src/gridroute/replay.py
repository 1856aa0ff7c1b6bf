"""Bounded FIFO replay memory for experience transitions."""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation


@dataclass(frozen=True)
class Transition:
    """One experience tuple; state vectors are raw (un-normalized) encodings."""

    state: np.ndarray
    action: tuple
    reward: float
    next_state: np.ndarray
    terminal: bool


class ReplayMemory:
    """FIFO buffer: pushing past capacity evicts strictly oldest-first."""

    def __init__(self, capacity):
        if capacity < 1:
            raise InvariantViolation("replay capacity must be positive")
        self.capacity = capacity
        self._items = deque(maxlen=capacity)

    def __len__(self):
        return len(self._items)

    def push(self, transition):
        self._items.append(transition)

    def sample(self, batch_size, rng):
        """Uniform sample with replacement; deterministic given the rng state."""
        if batch_size < 1:
            raise InvariantViolation("batch size must be positive")
        if len(self._items) < batch_size:
            raise InvariantViolation(
                f"cannot sample {batch_size} transitions from memory of {len(self._items)}"
            )
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[int(i)] for i in idx]

    def snapshot(self):
        """Oldest-to-newest view of the stored transitions (for audits)."""
        return list(self._items)
