"""Prioritized experience replay on a binary sum tree.

The tree stores whatever leaf values it is given and keeps every internal
node equal to the sum of its children, so sampling proportional to leaf
value is a log-depth prefix descent.  The buffer layer owns the priority
semantics: leaves hold p_i^beta1, sampling probabilities are therefore
p_i^beta1 / sum_j p_j^beta1, and importance weights (1/(N_D P(i)))^beta2
are normalized by the batch maximum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RngStream


@dataclass
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool


@dataclass
class ReplayConfig:
    capacity: int = 500_000           # N_D, power of two
    batch_size: int = 256             # N_b
    priority_exponent: float = 0.6    # beta1
    weight_exponent_start: float = 0.4   # beta2 anneal start
    weight_exponent_end: float = 1.0
    weight_anneal_steps: int = 100_000
    priority_floor: float = 1e-5      # epsilon added to |td|

    def __post_init__(self):
        if self.capacity < 1 or self.capacity & (self.capacity - 1):
            raise ValueError("capacity must be a positive power of two")
        if self.priority_exponent < 0:
            raise ValueError("priority_exponent must be >= 0")
        if not (0.0 <= self.weight_exponent_start <= 1.0
                and 0.0 <= self.weight_exponent_end <= 1.0):
            raise ValueError("weight exponents must lie in [0, 1]")
        if self.priority_floor <= 0:
            raise ValueError("priority_floor must be positive")


class SumTree:
    """Fixed-capacity binary sum tree over float leaf values.

    Internal nodes are recomputed from their children on every leaf write,
    so sums never accumulate drift; ``rebuild`` recomputes everything from
    the leaves in one pass regardless.
    """

    def __init__(self, capacity: int):
        if capacity < 1 or capacity & (capacity - 1):
            raise ValueError("capacity must be a positive power of two")
        self.capacity = capacity
        self.nodes = np.zeros(2 * capacity)

    @property
    def total(self) -> float:
        return float(self.nodes[1])

    def leaf_values(self) -> np.ndarray:
        return self.nodes[self.capacity:].copy()

    def set(self, index: int, value: float):
        if not 0 <= index < self.capacity:
            raise IndexError(f"leaf index {index} out of range")
        if value < 0 or not np.isfinite(value):
            raise ValueError(f"leaf value must be finite and >= 0, got {value}")
        node = self.capacity + index
        self.nodes[node] = value
        node //= 2
        while node >= 1:
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1]
            node //= 2

    def rebuild(self):
        for node in range(self.capacity - 1, 0, -1):
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1]

    def find_prefix(self, targets: np.ndarray) -> np.ndarray:
        """Vectorized descent: leaf index whose cumulative span covers each target."""
        idx = np.ones(len(targets), dtype=np.int64)
        remaining = np.asarray(targets, dtype=float).copy()
        while idx[0] < self.capacity:
            left = 2 * idx
            left_sum = self.nodes[left]
            go_right = remaining >= left_sum
            remaining -= np.where(go_right, left_sum, 0.0)
            idx = left + go_right
        return idx - self.capacity


class PrioritizedReplay:
    """Ring buffer with priority-proportional stratified sampling."""

    def __init__(self, cfg: ReplayConfig):
        self.cfg = cfg
        self.tree = SumTree(cfg.capacity)
        self.size = 0
        self._next = 0
        self.max_priority = 1.0
        self._sample_calls = 0
        self._writes_since_rebuild = 0
        self._obs = None
        self._actions = None
        self._rewards = np.zeros(cfg.capacity)
        self._next_obs = None
        self._dones = np.zeros(cfg.capacity, dtype=bool)

    def __len__(self) -> int:
        return self.size

    def _ensure_storage(self, t: Transition):
        if self._obs is None:
            cap = self.cfg.capacity
            self._obs = np.zeros((cap, t.obs.size))
            self._next_obs = np.zeros((cap, t.obs.size))
            self._actions = np.zeros((cap, t.action.size))

    def push(self, t: Transition, priority: float | None = None) -> int:
        """Store one transition; defaults to the current max raw priority."""
        if priority is None:
            priority = self.max_priority
        if priority < self.cfg.priority_floor:
            raise ValueError("priority below the configured floor")
        self._ensure_storage(t)
        i = self._next
        self._obs[i] = t.obs
        self._actions[i] = t.action
        self._rewards[i] = t.reward
        self._next_obs[i] = t.next_obs
        self._dones[i] = t.done
        self._set_priority(i, priority)
        self.max_priority = max(self.max_priority, priority)
        self._next = (self._next + 1) % self.cfg.capacity
        self.size = min(self.size + 1, self.cfg.capacity)
        return i

    def _set_priority(self, index: int, priority: float):
        self.tree.set(index, priority ** self.cfg.priority_exponent)
        self._writes_since_rebuild += 1
        if self._writes_since_rebuild >= 1 << 15:
            self.tree.rebuild()
            self._writes_since_rebuild = 0

    def weight_exponent(self) -> float:
        """Current beta2 on its linear annealing schedule."""
        c = self.cfg
        if c.weight_anneal_steps <= 0:
            return c.weight_exponent_end
        frac = min(1.0, self._sample_calls / c.weight_anneal_steps)
        return c.weight_exponent_start + frac * (c.weight_exponent_end - c.weight_exponent_start)

    def sample(self, batch_size: int, rng: RngStream):
        """Stratified draw of ``batch_size`` indices with importance weights.

        Returns (batch dict of arrays, indices, weights).  One draw is taken
        per equal-mass segment, which keeps the marginals of Eq.-style
        priority sampling while reducing variance.
        """
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} < batch of {batch_size}")
        total = self.tree.total
        segment = total / batch_size
        offsets = rng.gen.random(batch_size)
        targets = (np.arange(batch_size) + offsets) * segment
        # guard the upper edge against rounding past the stored mass
        targets = np.minimum(targets, np.nextafter(total, 0.0))
        indices = self.tree.find_prefix(targets)
        # stale (never-written) leaves have value 0 and are unreachable
        probs = self.tree.nodes[self.tree.capacity + indices] / total
        beta2 = self.weight_exponent()
        self._sample_calls += 1
        if beta2 == 0.0:
            weights = np.ones(batch_size)
        else:
            weights = (1.0 / (self.cfg.capacity * probs)) ** beta2
            weights = weights / weights.max()
        batch = {
            "obs": self._obs[indices],
            "actions": self._actions[indices],
            "rewards": self._rewards[indices],
            "next_obs": self._next_obs[indices],
            "dones": self._dones[indices],
        }
        return batch, indices, weights

    def update_priorities(self, indices, td_errors):
        """Refresh leaf priorities to |td| + floor for the sampled batch."""
        td_errors = np.abs(np.asarray(td_errors, dtype=float))
        for i, td in zip(np.asarray(indices, dtype=int), td_errors):
            if not 0 <= i < self.size:
                raise IndexError(f"replay index {i} out of range")
            p = td + self.cfg.priority_floor
            self._set_priority(int(i), p)
            self.max_priority = max(self.max_priority, p)
