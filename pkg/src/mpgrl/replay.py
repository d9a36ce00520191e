"""Ring-buffer experience replay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    next_state: np.ndarray
    reward: float
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring; oldest transitions are evicted first."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._storage: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._storage)

    @property
    def size(self) -> int:
        return len(self._storage)

    def push(self, transition: Transition) -> None:
        if not np.isfinite(transition.reward):
            raise ValueError("non-finite reward")
        if len(self._storage) < self.capacity:
            self._storage.append(transition)
        else:
            self._storage[self._next] = transition
        self._next = (self._next + 1) % self.capacity

    def sample(self, rng: np.random.Generator, batch_size: int) -> list[Transition]:
        if batch_size > len(self._storage):
            raise ValueError("not enough transitions to sample")
        idx = rng.integers(0, len(self._storage), size=batch_size)
        return [self._storage[i] for i in idx]

    @staticmethod
    def stack(batch: list[Transition]):
        """Batch as (states, actions, next_states, rewards, dones) arrays."""
        s = np.stack([t.state for t in batch])
        a = np.stack([t.action for t in batch])
        s2 = np.stack([t.next_state for t in batch])
        r = np.array([t.reward for t in batch], dtype=float)
        d = np.array([t.done for t in batch], dtype=float)
        return s, a, s2, r, d
