from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any

import numpy as np


class ReplayMode(str, enum.Enum):
    UNIFORM = "uniform"
    PRIORITIZED = "prioritized"


@dataclass
class Transition:
    state: Any
    action: Any
    reward: float
    next_state: Any = None  # None marks a terminal transition
    priority: float = 1.0

    @property
    def terminal(self) -> bool:
        return self.next_state is None


class ReplayBuffer:
    """Ring buffer with optional proportional prioritization.

    Stored priorities are ``|delta| + eps_p``; sampling probabilities are
    proportional to ``priority ** alpha``.  New items enter with the
    current maximum priority so they are seen at least once.
    """

    def __init__(
        self,
        capacity: int = 4096,
        mode: ReplayMode | str = ReplayMode.UNIFORM,
        alpha: float = 0.6,
        beta: float = 0.4,
        eps_p: float = 1e-3,
        rng: np.random.Generator | None = None,
    ):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.mode = ReplayMode(mode)
        self.alpha = alpha
        self.beta = beta
        self.eps_p = eps_p
        self.rng = rng if rng is not None else np.random.default_rng()
        self.items: list[Transition] = []
        self.prio = np.zeros(capacity)
        self.pos = 0

    def __len__(self) -> int:
        return len(self.items)

    def push(self, t: Transition) -> None:
        top = self.prio[: len(self.items)].max() if self.items else 1.0
        t.priority = float(top)
        if len(self.items) < self.capacity:
            self.items.append(t)
        else:
            self.items[self.pos] = t
        self.prio[self.pos] = top
        self.pos = (self.pos + 1) % self.capacity

    def probabilities(self) -> np.ndarray:
        n = len(self.items)
        if self.mode is ReplayMode.UNIFORM:
            return np.full(n, 1.0 / n)
        p = self.prio[:n] ** self.alpha
        return p / p.sum()

    def sample(self, batch_size: int) -> tuple[np.ndarray, list[Transition], np.ndarray]:
        """Returns (buffer indices, transitions, importance weights)."""
        n = len(self.items)
        if n == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        if batch_size > n:
            raise ValueError(f"batch_size {batch_size} exceeds buffer size {n}")
        if self.mode is ReplayMode.UNIFORM:
            idx = self.rng.integers(0, n, size=batch_size)
            return idx, [self.items[i] for i in idx], np.ones(batch_size)
        probs = self.probabilities()
        idx = self.rng.choice(n, size=batch_size, p=probs)
        w = (n * probs[idx]) ** (-self.beta)
        w /= w.max()
        return idx, [self.items[i] for i in idx], w

    def update_priorities(self, idx: np.ndarray, deltas: np.ndarray) -> None:
        pr = np.abs(np.asarray(deltas, dtype=np.float64)) + self.eps_p
        if not np.all(np.isfinite(pr)):
            raise ValueError("priorities must be finite")
        for i, p in zip(idx, pr):
            self.prio[i] = p
            self.items[i].priority = float(p)
