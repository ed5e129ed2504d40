"""
Bellman targets and the critic / actor updates of a TDM.

Targets follow the finite-horizon recursion

    y = -|| phi(s') - s_g ||_1                      if tau == 0
    y = Q'(s', a*, s_g, tau - 1)                    otherwise

where a* comes from the target actor (continuous actions) or from an
exhaustive max over a discrete action set.  Vectorized supervision
regresses every |f_j - s_g,j| onto its own per-dimension target instead of
only the scalar sum.

Educational Notes:
- Gradients of the l1 head: d|f_j - g_j| / d f_j = sign(f_j - g_j)
- Targets are computed from target copies and treated as constants
- ``reward_scale`` multiplies both predictions and targets inside the
  regression, which is the same as scaling the distance reward
"""

import logging
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from tdm_lab.core.interfaces import ActionValueFunction
from tdm_lab.core.models import ConfigError, HorizonError, NumericHealthError, RelabeledBatch
from tdm_lab.nn.mlp import mlp_backward
from tdm_lab.nn.optim import AdamState, adam_step
from tdm_lab.tdm.networks import TdmActor, TdmCritic

logger = logging.getLogger(__name__)


class SupervisionMode(Enum):
    SCALAR = 'scalar'
    VECTORIZED = 'vectorized'

    @classmethod
    def parse(cls, value: str) -> "SupervisionMode":
        text = str(value).strip().lower()
        for member in cls:
            if text == member.value:
                return member
        raise ConfigError(f"unknown supervision mode '{value}' (expected scalar or vectorized)")


# ============================================================================
# Targets
# ============================================================================

def greedy_discrete_actions(
    critic: TdmCritic,
    states: np.ndarray,
    goals: np.ndarray,
    horizons: np.ndarray,
    action_set: np.ndarray,
) -> np.ndarray:
    """
    argmax over a finite action set of q(s, a, s_g, tau), lowest index on ties.

    Returns:
        Selected action vectors, shape (n, action_dim)
    """
    n = states.shape[0]
    scores = np.empty((n, action_set.shape[0]))
    for k, action in enumerate(action_set):
        q, _ = critic.value(states, np.broadcast_to(action, (n, action.shape[0])), goals, horizons)
        scores[:, k] = q
    return action_set[np.argmax(scores, axis=1)]


def bellman_targets(
    target_critic: TdmCritic,
    target_actor: Optional[TdmActor],
    batch: RelabeledBatch,
    mode: SupervisionMode,
    action_set: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Regression targets for a relabeled batch.

    Args:
        target_critic: Slow copy of the critic
        target_actor: Slow copy of the actor; unused when ``action_set`` is given
        batch: Relabeled rows
        mode: Scalar targets of shape (M,) or vectorized targets of shape (M, G)
        action_set: Optional finite action set for an exact max over actions

    Raises:
        HorizonError: If any tau in the batch is negative
        ConfigError: If neither a target actor nor an action set is given
    """
    taus = np.asarray(batch.horizons)
    if np.any(taus < 0):
        raise HorizonError(f"relabeled batch contains negative tau (min {taus.min()})")

    previous = np.maximum(taus - 1, 0)
    if action_set is not None:
        best_actions = greedy_discrete_actions(
            target_critic, batch.next_states, batch.goals, previous, np.asarray(action_set, dtype=float)
        )
    elif target_actor is not None:
        best_actions = target_actor.act(batch.next_states, batch.goals, previous)
    else:
        raise ConfigError("bellman_targets needs a target actor or an action set")

    _, bootstrap = target_critic.value(batch.next_states, best_actions, batch.goals, previous)
    terminal = np.abs(batch.next_goals - batch.goals)
    per_dim = np.where((taus == 0)[:, None], terminal, bootstrap)

    if mode is SupervisionMode.VECTORIZED:
        return per_dim
    return -per_dim.sum(axis=1)


# ============================================================================
# Updates
# ============================================================================

def critic_loss_and_upstream(
    critic: TdmCritic,
    batch: RelabeledBatch,
    targets: np.ndarray,
    mode: SupervisionMode,
    reward_scale: float = 1.0,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Mean squared error and its gradient with respect to f.

    Returns:
        (loss, dLoss/df of shape (M, G), network input batch)
    """
    x = critic.network_input(batch.states, batch.actions, batch.goals, batch.horizons)
    f = critic.predict(batch.states, batch.actions, batch.goals, batch.horizons)
    diff = f - batch.goals
    per_dim = np.abs(diff)
    sign = np.sign(diff)
    m = len(batch)

    if mode is SupervisionMode.VECTORIZED:
        residual = reward_scale * (per_dim - targets)
        row_losses = np.sum(residual ** 2, axis=1)
        upstream = (2.0 * reward_scale / m) * residual * sign
    else:
        residual = reward_scale * (-per_dim.sum(axis=1) - targets)
        row_losses = residual ** 2
        upstream = (2.0 * reward_scale / m) * residual[:, None] * (-sign)

    if not np.all(np.isfinite(row_losses)):
        index = int(np.flatnonzero(~np.isfinite(row_losses))[0])
        raise NumericHealthError(
            "non-finite critic loss",
            {'batch_index': index, 'row': batch.row(index), 'target': np.asarray(targets[index]).tolist()},
        )
    return float(row_losses.mean()), upstream, x


def critic_update(
    critic: TdmCritic,
    batch: RelabeledBatch,
    targets: np.ndarray,
    opt_state: AdamState,
    mode: SupervisionMode,
    learning_rate: float,
    reward_scale: float = 1.0,
) -> Tuple[TdmCritic, AdamState, float]:
    """
    One Adam step on the critic regression; returns the pre-step loss.

    Raises:
        NumericHealthError: On a non-finite loss, with batch index and row values
    """
    loss, upstream, x = critic_loss_and_upstream(critic, batch, targets, mode, reward_scale)
    grads, _ = mlp_backward(critic.params, x, upstream)
    params, opt_state = adam_step(critic.params, grads, opt_state, learning_rate)
    return critic.with_params(params), opt_state, loss


def actor_objective_gradient(
    actor: TdmActor,
    critic: ActionValueFunction,
    batch: RelabeledBatch,
):
    """
    Gradient of the mean critic value with respect to the actor parameters.

    Returns:
        (mean q, gradient of mean q as MlpParams-shaped values)
    """
    x = actor.network_input(batch.states, batch.goals, batch.horizons)
    actions = actor.act(batch.states, batch.goals, batch.horizons)
    q, dq_da = critic.value_and_action_grad(batch.states, actions, batch.goals, batch.horizons)
    upstream = dq_da * actor.half_range / len(batch)
    grads, _ = mlp_backward(actor.params, x, upstream)
    return float(q.mean()), grads


def actor_update(
    actor: TdmActor,
    critic: ActionValueFunction,
    batch: RelabeledBatch,
    opt_state: AdamState,
    learning_rate: float,
) -> Tuple[TdmActor, AdamState]:
    """
    One Adam ascent step on mean q(s, pi(s, s_g, tau), s_g, tau).

    Only the action input of the critic carries gradient; the critic itself
    is not modified.

    Raises:
        NumericHealthError: If the actor gradient has non-finite entries
    """
    _, ascent = actor_objective_gradient(actor, critic, batch)
    descent = ascent.with_arrays([-g for g in ascent.arrays()])
    params, opt_state = adam_step(actor.params, descent, opt_state, learning_rate)
    return actor.with_params(params), opt_state
