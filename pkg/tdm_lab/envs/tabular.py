"""
Finite deterministic MDPs and their one-hot environment wrapper.

A TabularMdp is an explicit transition table next[s][a] plus a coordinate
embedding of every state.  Distances between states are l1 distances of
their embeddings, so the exact DP oracle and the neural learner share one
metric.

Builders:
    make_chain(n)    actions 0 = left, 1 = right, saturating at both ends
    make_grid(w, h)  state s = x + w * y; actions 0 = up (+y), 1 = down,
                     2 = left, 3 = right; moves off the grid stay put

Text format accepted by load_mdp():

    # comment lines are ignored
    S A
    s a next          (S * A lines)
    ...

Files without an embedding use the state index as a 1-D coordinate.

Educational Notes:
- TabularEnvironment exposes the MDP through the continuous interface: the
  state is a one-hot vector, the goal map is embedding^T (an affine map of
  state features), and a continuous action vector selects the discrete
  action by argmax (lowest index on ties)
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from tdm_lab.core.interfaces import BaseEnvironment
from tdm_lab.core.models import ConfigError, OracleError
from tdm_lab.envs.spec import EnvSpec
from tdm_lab.utils.validation import validate_file_exists

logger = logging.getLogger(__name__)

CHAIN_LEFT, CHAIN_RIGHT = 0, 1
GRID_UP, GRID_DOWN, GRID_LEFT, GRID_RIGHT = 0, 1, 2, 3


# ============================================================================
# Tabular MDP
# ============================================================================

@dataclass
class TabularMdp:
    """
    Deterministic finite MDP.

    Attributes:
        next_state: Integer table of shape (S, A)
        embedding: Coordinates of every state, shape (S, D)
        name: Label used in reports
    """

    next_state: np.ndarray
    embedding: np.ndarray
    name: str = 'mdp'

    def __post_init__(self):
        self.next_state = np.asarray(self.next_state, dtype=np.int64)
        self.embedding = np.asarray(self.embedding, dtype=float)
        if self.next_state.ndim != 2 or self.next_state.size == 0:
            raise OracleError(f"{self.name}: transition table must be a non-empty (S, A) array")
        if self.embedding.ndim == 1:
            self.embedding = self.embedding[:, None]
        if self.embedding.shape[0] != self.n_states:
            raise OracleError(
                f"{self.name}: embedding has {self.embedding.shape[0]} rows for {self.n_states} states"
            )
        if np.any(self.next_state < 0) or np.any(self.next_state >= self.n_states):
            raise OracleError(f"{self.name}: transition table entries must lie in [0, {self.n_states})")

    @property
    def n_states(self) -> int:
        return int(self.next_state.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.next_state.shape[1])

    def distance_matrix(self) -> np.ndarray:
        """D[i, j] = l1 distance between the embeddings of states i and j."""
        diff = self.embedding[:, None, :] - self.embedding[None, :, :]
        return np.abs(diff).sum(axis=-1)


def tabular_step(mdp: TabularMdp, s: int, a: int) -> int:
    """
    Table lookup next[s][a].

    Raises:
        OracleError: If either index is out of range
    """
    if not (0 <= s < mdp.n_states):
        raise OracleError(f"state index {s} out of range [0, {mdp.n_states})")
    if not (0 <= a < mdp.n_actions):
        raise OracleError(f"action index {a} out of range [0, {mdp.n_actions})")
    return int(mdp.next_state[s, a])


# ============================================================================
# Builders
# ============================================================================

def make_chain(n: int, spacing: float = 1.0) -> TabularMdp:
    """n-state chain with saturating left/right moves."""
    if n < 1:
        raise OracleError(f"chain length must be >= 1, got {n}")
    states = np.arange(n)
    table = np.stack([np.maximum(states - 1, 0), np.minimum(states + 1, n - 1)], axis=1)
    return TabularMdp(table, spacing * states.astype(float), name=f'chain{n}')


def make_grid(width: int, height: int) -> TabularMdp:
    """width x height grid with unit spacing and blocking borders."""
    if width < 1 or height < 1:
        raise OracleError(f"grid must be at least 1x1, got {width}x{height}")
    table = np.zeros((width * height, 4), dtype=np.int64)
    embedding = np.zeros((width * height, 2))
    for y in range(height):
        for x in range(width):
            s = x + width * y
            embedding[s] = (x, y)
            table[s, GRID_UP] = x + width * min(y + 1, height - 1)
            table[s, GRID_DOWN] = x + width * max(y - 1, 0)
            table[s, GRID_LEFT] = max(x - 1, 0) + width * y
            table[s, GRID_RIGHT] = min(x + 1, width - 1) + width * y
    return TabularMdp(table, embedding, name=f'grid{width}x{height}')


BUILTIN_MDPS: Dict[str, tuple] = {
    # name: (builder, default episode horizon)
    'gridchain5': (lambda: make_chain(5), 5),
    'grid3x3': (lambda: make_grid(3, 3), 5),
    'grid9x9': (lambda: make_grid(9, 9), 18),
}


def load_mdp(path: Union[str, Path]) -> TabularMdp:
    """
    Parse the plain-text "S A" / "s a next" format.

    Raises:
        ConfigError: If the file does not exist
        OracleError: If the content is malformed or incomplete
    """
    path = validate_file_exists(Path(path), "mdp file")
    rows = []
    for raw in path.read_text().splitlines():
        line = raw.split('#', 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows or len(rows[0]) != 2:
        raise OracleError(f"{path}: first line must be 'S A'")
    try:
        n_states, n_actions = int(rows[0][0]), int(rows[0][1])
        entries = [tuple(int(v) for v in row) for row in rows[1:]]
    except ValueError as e:
        raise OracleError(f"{path}: non-integer entry ({e})")

    table = -np.ones((n_states, n_actions), dtype=np.int64)
    for entry in entries:
        if len(entry) != 3:
            raise OracleError(f"{path}: expected 's a next', got {entry}")
        s, a, nxt = entry
        if not (0 <= s < n_states and 0 <= a < n_actions):
            raise OracleError(f"{path}: index out of range in {entry}")
        table[s, a] = nxt
    if np.any(table < 0):
        missing = int(np.sum(table < 0))
        raise OracleError(f"{path}: {missing} (s, a) pairs have no transition")

    logger.info(f"Loaded mdp from {path}: S={n_states}, A={n_actions}")
    return TabularMdp(table, np.arange(n_states, dtype=float), name=path.stem)


def resolve_mdp(name_or_path: str) -> TabularMdp:
    """Builtin name (gridchain5, grid3x3, grid9x9) or a path to an mdp file."""
    if name_or_path in BUILTIN_MDPS:
        builder, _ = BUILTIN_MDPS[name_or_path]
        mdp = builder()
        mdp.name = name_or_path
        return mdp
    return load_mdp(name_or_path)


# ============================================================================
# One-hot Environment
# ============================================================================

class TabularEnvironment(BaseEnvironment):
    """
    Continuous-interface view of a TabularMdp.

    States are one-hot vectors of length S, actions are vectors in [-1, 1]^A
    whose argmax picks the discrete action, and goals are coordinates in the
    embedding space.  Initial states and goals are uniform over all states.
    """

    def __init__(self, mdp: TabularMdp, horizon: int, name: Optional[str] = None):
        self.mdp = mdp
        lows = mdp.embedding.min(axis=0)
        highs = mdp.embedding.max(axis=0)
        super().__init__(EnvSpec(
            name=name or mdp.name,
            state_dim=mdp.n_states,
            action_dim=mdp.n_actions,
            action_low=-np.ones(mdp.n_actions),
            action_high=np.ones(mdp.n_actions),
            horizon=horizon,
            goal_matrix=mdp.embedding.T,
            goal_offset=np.zeros(mdp.embedding.shape[1]),
            goal_low=lows,
            goal_high=highs,
            discrete_actions=mdp.n_actions,
            goal_features='embedding',
        ))

    def one_hot(self, index: int) -> np.ndarray:
        vec = np.zeros(self.mdp.n_states)
        vec[index] = 1.0
        return vec

    def action_vector(self, action: int) -> np.ndarray:
        """Continuous action whose argmax is ``action``."""
        vec = -np.ones(self.mdp.n_actions)
        vec[action] = 1.0
        return vec

    def action_set(self) -> np.ndarray:
        """All discrete actions as continuous vectors, shape (A, A)."""
        return np.stack([self.action_vector(a) for a in range(self.mdp.n_actions)])

    @staticmethod
    def state_index(state: np.ndarray) -> int:
        return int(np.argmax(state))

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return self.one_hot(int(rng.integers(self.mdp.n_states)))

    def sample_goal(self, rng: np.random.Generator) -> np.ndarray:
        return self.mdp.embedding[int(rng.integers(self.mdp.n_states))].copy()

    def dynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        s = np.argmax(states, axis=1)
        a = np.argmax(actions, axis=1)
        nxt = self.mdp.next_state[s, a]
        return np.eye(self.mdp.n_states)[nxt]


def make_tabular_env(
    name: str,
    horizon: Optional[int] = None,
    goal_features: str = 'embedding',
) -> TabularEnvironment:
    """Build a builtin tabular environment by name."""
    if goal_features not in ('embedding', 'full'):
        raise ConfigError(f"tabular environments use embedding goals, got '{goal_features}'")
    if name not in BUILTIN_MDPS:
        raise OracleError(f"unknown tabular environment '{name}'")
    builder, default_horizon = BUILTIN_MDPS[name]
    mdp = builder()
    mdp.name = name
    return TabularEnvironment(mdp, horizon or default_horizon, name=name)
