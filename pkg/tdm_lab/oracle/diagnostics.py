"""
Statistical and neural certification helpers for the oracle suite.

- horizon_uniformity: chi-square test that sampled horizons are uniform
- neural_oracle_check: trains the TDM critic on one-hot states of a
  tabular MDP and compares the table it induces with dp_solve
"""

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy import stats

from tdm_lab.core.models import Transition
from tdm_lab.envs.tabular import TabularEnvironment, TabularMdp
from tdm_lab.nn.optim import AdamState
from tdm_lab.nn.target import TargetCopy, polyak_update
from tdm_lab.oracle.dp import TdmTable, compare_tables, dp_solve
from tdm_lab.replay.buffer import RelabelStrategy, ReplayBuffer
from tdm_lab.tdm.losses import SupervisionMode, bellman_targets, critic_update
from tdm_lab.tdm.networks import TdmCritic

logger = logging.getLogger(__name__)

UNIFORMITY_QUANTILE = 0.999


def horizon_uniformity(horizons: np.ndarray, tau_max: int) -> Dict[str, float]:
    """
    Chi-square goodness of fit of horizons against uniform {0..tau_max}.

    Returns:
        Dict with statistic, p_value, critical value at the 0.999 quantile
        and a 'uniform' flag (statistic below the critical value)
    """
    counts = np.bincount(np.asarray(horizons, dtype=np.int64), minlength=tau_max + 1)
    if tau_max == 0:
        return {'statistic': 0.0, 'p_value': 1.0, 'critical_value': 0.0, 'uniform': True}
    result = stats.chisquare(counts)
    critical = float(stats.chi2.ppf(UNIFORMITY_QUANTILE, df=tau_max))
    return {
        'statistic': float(result.statistic),
        'p_value': float(result.pvalue),
        'critical_value': critical,
        'uniform': bool(result.statistic < critical),
    }


@dataclass
class NeuralCheckResult:
    learned: TdmTable
    exact: TdmTable
    max_abs: float
    argmax_mismatches: int
    gradient_steps: int


def critic_table(critic: TdmCritic, env: TabularEnvironment, tau_max: int) -> TdmTable:
    """Evaluate q at every (s, a, g, tau) of the MDP."""
    mdp = env.mdp
    s_idx, a_idx, g_idx, taus = np.meshgrid(
        np.arange(mdp.n_states), np.arange(mdp.n_actions), np.arange(mdp.n_states), np.arange(tau_max + 1),
        indexing='ij',
    )
    flat = [x.reshape(-1) for x in (s_idx, a_idx, g_idx, taus)]
    states = np.eye(mdp.n_states)[flat[0]]
    actions = env.action_set()[flat[1]]
    goals = mdp.embedding[flat[2]]
    q, _ = critic.value(states, actions, goals, flat[3])
    return TdmTable(q.reshape(s_idx.shape))


def neural_oracle_check(
    mdp: TabularMdp,
    tau_max: int,
    gradient_steps: int = 200_000,
    seed: int = 0,
    batch_size: int = 128,
    learning_rate: float = 1e-3,
    polyak: float = 0.995,
    hidden_sizes=(64, 64),
    mode: SupervisionMode = SupervisionMode.VECTORIZED,
) -> NeuralCheckResult:
    """
    Fit the TDM critic on every (s, a) transition of ``mdp`` and compare with dp_solve.

    The buffer holds each transition once; goals are relabeled uniformly
    from stored next states and the max over actions is exact enumeration.
    """
    env = TabularEnvironment(mdp, horizon=tau_max + 1)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 41]))
    critic = TdmCritic.create(mdp.n_states, mdp.n_actions, env.spec.goal_dim, list(hidden_sizes), rng)
    target = TargetCopy.of(critic.params, polyak)
    opt = AdamState.for_params(critic.params)
    action_set = env.action_set()

    buffer = ReplayBuffer.for_env(env, capacity=mdp.n_states * mdp.n_actions)
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            nxt = int(mdp.next_state[s, a])
            buffer.store(Transition(env.one_hot(s), action_set[a], env.one_hot(nxt), trajectory_id=s * mdp.n_actions + a))

    for step in range(gradient_steps):
        batch = buffer.sample_relabeled(batch_size, RelabelStrategy.UNIFORM_FROM_BUFFER, tau_max, rng)
        targets = bellman_targets(critic.with_params(target.params), None, batch, mode, action_set)
        critic, opt, loss = critic_update(critic, batch, targets, opt, mode, learning_rate)
        target = polyak_update(target, critic.params)
        if step % 20_000 == 0:
            logger.info(f"neural oracle check: step {step}, critic loss {loss:.6f}")

    learned = critic_table(critic, env, tau_max)
    exact = dp_solve(mdp, tau_max)
    max_abs, mismatches = compare_tables(learned, exact)
    logger.info(f"neural oracle check on {mdp.name}: max_abs={max_abs:.4f}, argmax mismatches={mismatches}")
    return NeuralCheckResult(learned, exact, max_abs, mismatches, gradient_steps)
