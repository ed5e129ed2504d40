"""
Adam optimizer over MlpParams.

The update is the standard bias-corrected recurrence:

    m <- b1 m + (1 - b1) g
    v <- b2 v + (1 - b2) g^2
    w <- w - lr * m_hat / (sqrt(v_hat) + eps)

adam_step is value-level: it returns new parameters and a new state and
never mutates its arguments.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from tdm_lab.core.models import ConfigError, ShapeError
from tdm_lab.nn.mlp import MlpParams
from tdm_lab.utils.validation import check_all_finite

logger = logging.getLogger(__name__)

DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8


@dataclass
class AdamState:
    """
    Per-parameter moment accumulators plus the step counter.

    ``first_moment`` and ``second_moment`` mirror ``MlpParams.arrays()``.
    """

    first_moment: List[np.ndarray]
    second_moment: List[np.ndarray]
    step: int = 0
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON

    @classmethod
    def for_params(
        cls,
        params: MlpParams,
        beta1: float = DEFAULT_BETA1,
        beta2: float = DEFAULT_BETA2,
        epsilon: float = DEFAULT_EPSILON,
    ) -> "AdamState":
        zeros = [np.zeros_like(a) for a in params.arrays()]
        return cls([z.copy() for z in zeros], zeros, 0, beta1, beta2, epsilon)


def adam_step(
    params: MlpParams,
    grads: MlpParams,
    state: AdamState,
    learning_rate: float,
) -> Tuple[MlpParams, AdamState]:
    """
    Apply one Adam step (descent on ``grads``).

    Raises:
        ShapeError: If grads or accumulators do not mirror params
        NumericHealthError: If any gradient entry is non-finite
        ConfigError: If learning_rate <= 0
    """
    if learning_rate <= 0:
        raise ConfigError(f"learning_rate must be > 0, got {learning_rate}")
    if not params.same_structure(grads):
        raise ShapeError(f"gradient shapes {grads.sizes} do not mirror parameters {params.sizes}")
    param_arrays = params.arrays()
    grad_arrays = grads.arrays()
    if [m.shape for m in state.first_moment] != [p.shape for p in param_arrays] or \
            [v.shape for v in state.second_moment] != [p.shape for p in param_arrays]:
        raise ShapeError("Adam accumulators do not mirror parameter shapes")
    check_all_finite(grad_arrays, "gradient")

    t = state.step + 1
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t

    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(param_arrays, grad_arrays, state.first_moment, state.second_moment):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        update = learning_rate * (m / correction1) / (np.sqrt(v / correction2) + eps)
        new_params.append(p - update)
        new_m.append(m)
        new_v.append(v)

    return params.with_arrays(new_params), AdamState(new_m, new_v, t, b1, b2, eps)
