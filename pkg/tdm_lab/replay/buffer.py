"""
Replay buffer with trajectory bookkeeping and sample-time relabeling.

Stored transitions are plain (s, a, s') triples.  Goals and horizons are
attached only when a batch is drawn, which is what lets every transition
supervise many (goal, horizon) pairs.

Educational Notes:
- Storage is a ring buffer; eviction is oldest-first
- Each transition gets a global sequence number; slot = seq % capacity
- Per-trajectory sequence lists give the future states of any stored step
  without scanning the buffer.  Since eviction removes the oldest entries
  first, every step stored after a present base step is also present.
- FutureOnTrajectory draws j uniformly from [i, last stored step] and uses
  s'_j = s_{j+1} as the goal, so goals are always strictly later than s_i.
  The last stored step can only pick its own s'.
"""

import logging
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from tdm_lab.core.models import ConfigError, RelabeledBatch, ReplayError, Transition
from tdm_lab.utils.csv_writer import write_frame
from tdm_lab.utils.validation import check_dim, check_finite

logger = logging.getLogger(__name__)

DEFAULT_CAPACITY = 100_000


class RelabelStrategy(Enum):
    """How goals are attached to sampled transitions."""

    FUTURE_ON_TRAJECTORY = 'future'
    UNIFORM_FROM_BUFFER = 'buffer'
    UNIFORM_FROM_GOAL_BOX = 'goalbox'

    @classmethod
    def parse(cls, value: str) -> "RelabelStrategy":
        """Accept either the short value ('future') or the member name."""
        text = str(value).strip()
        for member in cls:
            if text.lower() in (member.value, member.name.lower()):
                return member
        aliases = {
            'futureontrajectory': cls.FUTURE_ON_TRAJECTORY,
            'uniformfrombuffer': cls.UNIFORM_FROM_BUFFER,
            'uniformfromgoalbox': cls.UNIFORM_FROM_GOAL_BOX,
        }
        key = text.lower().replace('_', '')
        if key in aliases:
            return aliases[key]
        raise ConfigError(f"unknown relabel strategy '{value}'")


class ReplayBuffer:
    """
    Ring buffer of transitions with per-trajectory indices.

    Example Usage:
        >>> buffer = ReplayBuffer.for_env(env, capacity=1000)
        >>> buffer.store(Transition(s, a, s_next, trajectory_id=0))
        >>> batch = buffer.sample_relabeled(128, RelabelStrategy.FUTURE_ON_TRAJECTORY, 49, rng)
    """

    def __init__(
        self,
        capacity: int,
        state_dim: int,
        action_dim: int,
        goal_map: Callable[[np.ndarray], np.ndarray],
        goal_low: np.ndarray,
        goal_high: np.ndarray,
    ):
        if capacity < 1:
            raise ReplayError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.goal_map = goal_map
        self.goal_low = np.asarray(goal_low, dtype=float)
        self.goal_high = np.asarray(goal_high, dtype=float)

        self._states = np.zeros((self.capacity, self.state_dim))
        self._actions = np.zeros((self.capacity, self.action_dim))
        self._next_states = np.zeros((self.capacity, self.state_dim))
        self._trajectory_ids = np.zeros(self.capacity, dtype=np.int64)
        self._step_indices = np.zeros(self.capacity, dtype=np.int64)
        self._seqs = np.zeros(self.capacity, dtype=np.int64)

        self._next_seq = 0
        self._size = 0
        # trajectory id -> global sequence numbers of its stored steps, in step order
        self._trajectories: Dict[int, List[int]] = {}
        # trajectory id -> step index of the first entry in _trajectories
        self._first_steps: Dict[int, int] = {}
        self._newest_trajectory: Optional[int] = None
        logger.debug(f"ReplayBuffer created (capacity={self.capacity})")

    @classmethod
    def for_env(cls, env, capacity: int = DEFAULT_CAPACITY) -> "ReplayBuffer":
        spec = env.spec
        return cls(capacity, spec.state_dim, spec.action_dim, env.goal_map, spec.goal_low, spec.goal_high)

    # ========================================================================
    # Storage
    # ========================================================================

    def __len__(self) -> int:
        return self._size

    @property
    def size(self) -> int:
        return self._size

    def store(self, transition: Transition) -> "ReplayBuffer":
        """
        Append a transition, evicting the oldest one at capacity.

        The within-trajectory index is assigned by the buffer: the n-th
        transition stored under a trajectory id gets index n.

        Raises:
            ShapeError: If state or action widths do not match
            NumericHealthError: If any entry is non-finite
        """
        state = np.asarray(transition.state, dtype=float)
        action = np.asarray(transition.action, dtype=float)
        next_state = np.asarray(transition.next_state, dtype=float)
        check_dim(state.shape[-1], self.state_dim, "stored state")
        check_dim(action.shape[-1], self.action_dim, "stored action")
        check_dim(next_state.shape[-1], self.state_dim, "stored next state")
        trajectory_id = int(transition.trajectory_id)
        context = {'trajectory_id': trajectory_id, 'step_index': self._next_step_index(trajectory_id)}
        check_finite(state, "stored state", context)
        check_finite(action, "stored action", context)
        check_finite(next_state, "stored next state", context)

        seq = self._next_seq
        slot = seq % self.capacity
        if self._size == self.capacity:
            self._evict(slot)

        if self._newest_trajectory not in (None, trajectory_id):
            self._release_if_empty(self._newest_trajectory)
        step_index = self._next_step_index(trajectory_id)
        steps = self._trajectories.setdefault(trajectory_id, [])
        self._first_steps.setdefault(trajectory_id, step_index)
        self._states[slot] = state
        self._actions[slot] = action
        self._next_states[slot] = next_state
        self._trajectory_ids[slot] = trajectory_id
        self._step_indices[slot] = step_index
        self._seqs[slot] = seq
        steps.append(seq)
        self._newest_trajectory = trajectory_id

        self._next_seq += 1
        self._size = min(self._size + 1, self.capacity)
        return self

    def _next_step_index(self, trajectory_id: int) -> int:
        steps = self._trajectories.get(trajectory_id)
        if steps is None:
            return 0
        return self._first_steps[trajectory_id] + len(steps)

    def _evict(self, slot: int) -> None:
        trajectory_id = int(self._trajectory_ids[slot])
        steps = self._trajectories[trajectory_id]
        # The evicted slot holds the trajectory's oldest stored step.
        steps.pop(0)
        self._first_steps[trajectory_id] += 1
        # The trajectory being written keeps its offset even with nothing left stored.
        if trajectory_id != self._newest_trajectory:
            self._release_if_empty(trajectory_id)

    def _release_if_empty(self, trajectory_id: int) -> None:
        if not self._trajectories.get(trajectory_id, [None]):
            del self._trajectories[trajectory_id]
            del self._first_steps[trajectory_id]

    def trajectory_indices(self, trajectory_id: int) -> np.ndarray:
        """Within-trajectory indices of the still-stored steps of a trajectory."""
        steps = self._trajectories.get(int(trajectory_id), [])
        return np.array([self._step_indices[s % self.capacity] for s in steps], dtype=np.int64)

    def transition(self, slot: int) -> Transition:
        """Stored transition at a buffer slot."""
        if not 0 <= slot < self._size:
            raise ReplayError(f"slot {slot} is empty (size {self._size})")
        return Transition(
            self._states[slot].copy(),
            self._actions[slot].copy(),
            self._next_states[slot].copy(),
            int(self._trajectory_ids[slot]),
            int(self._step_indices[slot]),
        )

    def step_index(self, slot: int) -> int:
        return int(self._step_indices[slot])

    def trajectory_id(self, slot: int) -> int:
        return int(self._trajectory_ids[slot])

    # ========================================================================
    # Sampling
    # ========================================================================

    def sample_transitions(self, batch_size: int, rng: np.random.Generator):
        """Uniformly drawn (states, actions, next_states, slots); no relabeling."""
        if self._size == 0:
            raise ReplayError("cannot sample from an empty replay buffer")
        if batch_size < 1:
            raise ReplayError(f"batch size must be >= 1, got {batch_size}")
        slots = rng.integers(0, self._size, size=batch_size)
        return self._states[slots], self._actions[slots], self._next_states[slots], slots

    def sample_relabeled(
        self,
        batch_size: int,
        strategy: RelabelStrategy,
        tau_max: int,
        rng: np.random.Generator,
        future_window: Optional[int] = None,
    ) -> RelabeledBatch:
        """
        Draw ``batch_size`` rows and attach goals and horizons.

        Base transitions are uniform over the buffer, horizons uniform on
        {0, ..., tau_max}.  The buffer is not modified.

        Args:
            batch_size: Number of rows M
            strategy: Goal relabeling strategy
            tau_max: Largest horizon
            rng: Generator for every draw
            future_window: Optional cap on how many steps ahead
                FutureOnTrajectory may look (None = to the trajectory end)

        Raises:
            ReplayError: On an empty buffer or invalid arguments
        """
        if tau_max < 0:
            raise ReplayError(f"tau_max must be >= 0, got {tau_max}")
        if future_window is not None and future_window < 1:
            raise ReplayError(f"future_window must be >= 1, got {future_window}")
        states, actions, next_states, slots = self.sample_transitions(batch_size, rng)
        horizons = rng.integers(0, tau_max + 1, size=batch_size)

        if strategy is RelabelStrategy.FUTURE_ON_TRAJECTORY:
            sources = self._future_sources(slots, rng, future_window)
            goals = self.goal_map(self._next_states[sources])
        elif strategy is RelabelStrategy.UNIFORM_FROM_BUFFER:
            sources = rng.integers(0, self._size, size=batch_size)
            goals = self.goal_map(self._next_states[sources])
        elif strategy is RelabelStrategy.UNIFORM_FROM_GOAL_BOX:
            sources = -np.ones(batch_size, dtype=np.int64)
            goals = rng.uniform(self.goal_low, self.goal_high, size=(batch_size, self.goal_low.shape[0]))
        else:
            raise ReplayError(f"unsupported relabel strategy: {strategy}")

        return RelabeledBatch(
            states=states.copy(),
            actions=actions.copy(),
            next_states=next_states.copy(),
            goals=np.asarray(goals, dtype=float),
            horizons=horizons.astype(np.int64),
            next_goals=self.goal_map(next_states),
            base_indices=slots.astype(np.int64),
            goal_sources=np.asarray(sources, dtype=np.int64),
        )

    def _future_sources(
        self,
        slots: np.ndarray,
        rng: np.random.Generator,
        future_window: Optional[int],
    ) -> np.ndarray:
        sources = np.empty(len(slots), dtype=np.int64)
        for row, slot in enumerate(slots):
            trajectory_id = int(self._trajectory_ids[slot])
            steps = self._trajectories[trajectory_id]
            position = int(self._step_indices[slot]) - self._first_steps[trajectory_id]
            last = len(steps) - 1
            if future_window is not None:
                last = min(last, position + future_window - 1)
            pick = position if last == position else int(rng.integers(position, last + 1))
            sources[row] = steps[pick] % self.capacity
        return sources

    # ========================================================================
    # Debug Export
    # ========================================================================

    def _ordered_slots(self) -> List[int]:
        oldest = self._next_seq - self._size
        return [s % self.capacity for s in range(oldest, self._next_seq)]

    def stored_arrays(self):
        """(states, actions, next_states) of every stored transition, oldest first."""
        order = self._ordered_slots()
        return self._states[order], self._actions[order], self._next_states[order]

    def to_frame(self) -> pd.DataFrame:
        """One row per stored transition, oldest first."""
        order = self._ordered_slots()
        columns: Dict[str, np.ndarray] = {
            'trajectory_id': self._trajectory_ids[order],
            'step_index': self._step_indices[order],
        }
        for prefix, values in (('s', self._states), ('a', self._actions), ('next_s', self._next_states)):
            for j in range(values.shape[1]):
                columns[f'{prefix}{j}'] = values[order, j]
        return pd.DataFrame(columns)

    def dump_csv(self, output_path: Path) -> Path:
        """Write the buffer contents to CSV for debugging."""
        path = write_frame(self.to_frame(), Path(output_path))
        logger.info(f"Replay buffer dumped to {path} ({self._size} transitions)")
        return path

    def __repr__(self) -> str:
        return f"ReplayBuffer(size={self._size}, capacity={self.capacity})"
