"""
Dense multilayer perceptrons with hand-written backpropagation.

Every network in the project (TDM prediction network f, actors, DDPG critics
and dynamics models) is an MlpParams value evaluated by mlp_forward and
differentiated by mlp_backward.  Inputs may be a single vector of shape
(in_dim,) or a batch of shape (n, in_dim); outputs follow the same rank.

Educational Notes:
- A layer computes y = W x + b with W of shape (out_dim, in_dim)
- Hidden layers use the rectified-linear activation; the last layer uses
  either no activation or tanh
- Backward returns gradients of <upstream, output> summed over the batch,
  so a loss gradient is obtained by passing dLoss/dOutput as upstream
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from tdm_lab.core.models import ConfigError, ShapeError
from tdm_lab.utils.validation import check_dim

logger = logging.getLogger(__name__)


# ============================================================================
# Activation Tags
# ============================================================================

RELU = 'relu'
TANH = 'tanh'
NONE = 'none'

HIDDEN_ACTIVATIONS = (RELU,)
OUTPUT_ACTIVATIONS = (NONE, TANH)


def _activate(z: np.ndarray, tag: str) -> np.ndarray:
    if tag == RELU:
        return np.maximum(z, 0.0)
    if tag == TANH:
        return np.tanh(z)
    return z


def _activation_slope(z: np.ndarray, out: np.ndarray, tag: str) -> np.ndarray:
    if tag == RELU:
        return (z > 0.0).astype(z.dtype)
    if tag == TANH:
        return 1.0 - out * out
    return np.ones_like(z)


# ============================================================================
# Parameter Containers
# ============================================================================

@dataclass
class Layer:
    """One dense layer: weight (out_dim x in_dim) and bias (out_dim)."""

    weight: np.ndarray
    bias: np.ndarray

    @property
    def in_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weight.shape[0])


@dataclass
class MlpParams:
    """
    Parameters of a multilayer perceptron.

    Invariants enforced at construction:
    - consecutive layer dimensions chain
    - bias length equals the layer's output dimension
    - activation tags are known

    The same container is used for gradients ("MlpParams-shaped"), which is
    what lets Adam and polyak averaging walk parameters and gradients in
    lockstep through ``arrays()``.
    """

    layers: List[Layer]
    hidden_activation: str = RELU
    output_activation: str = NONE

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("an MLP needs at least one layer")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigError(f"unknown hidden activation: {self.hidden_activation}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigError(f"unknown output activation: {self.output_activation}")
        for k, layer in enumerate(self.layers):
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.out_dim,):
                raise ShapeError(
                    f"layer {k}: weight {layer.weight.shape} and bias {layer.bias.shape} "
                    f"do not form a dense layer"
                )
            if k > 0:
                check_dim(layer.in_dim, self.layers[k - 1].out_dim, f"layer {k} input")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def sizes(self) -> List[int]:
        """Layer widths including input and output, e.g. [3, 8, 2]."""
        return [self.in_dim] + [layer.out_dim for layer in self.layers]

    def activation_of(self, index: int) -> str:
        """Activation tag applied after layer ``index``."""
        return self.output_activation if index == len(self.layers) - 1 else self.hidden_activation

    def arrays(self) -> List[np.ndarray]:
        """Flat list [W0, b0, W1, b1, ...] referencing the live arrays."""
        out: List[np.ndarray] = []
        for layer in self.layers:
            out.append(layer.weight)
            out.append(layer.bias)
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MlpParams":
        """Build a structurally identical MlpParams from a flat array list."""
        if len(arrays) != 2 * len(self.layers):
            raise ShapeError(
                f"expected {2 * len(self.layers)} arrays, got {len(arrays)}"
            )
        layers = []
        for k, layer in enumerate(self.layers):
            weight, bias = np.asarray(arrays[2 * k]), np.asarray(arrays[2 * k + 1])
            if weight.shape != layer.weight.shape or bias.shape != layer.bias.shape:
                raise ShapeError(
                    f"layer {k}: shapes {weight.shape}/{bias.shape} do not mirror "
                    f"{layer.weight.shape}/{layer.bias.shape}"
                )
            layers.append(Layer(weight, bias))
        return MlpParams(layers, self.hidden_activation, self.output_activation)

    def copy(self) -> "MlpParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def zeros_like(self) -> "MlpParams":
        return self.with_arrays([np.zeros_like(a) for a in self.arrays()])

    def same_structure(self, other: "MlpParams") -> bool:
        return [a.shape for a in self.arrays()] == [b.shape for b in other.arrays()]

    def max_abs_difference(self, other: "MlpParams") -> float:
        """Infinity-norm distance between two structurally identical networks."""
        if not self.same_structure(other):
            raise ShapeError(f"networks differ in shape: {self.sizes} vs {other.sizes}")
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.arrays(), other.arrays()))


# ============================================================================
# Initialization
# ============================================================================

def init_mlp(
    sizes: Sequence[int],
    rng: np.random.Generator,
    output_activation: str = NONE,
    final_scale: float = 1.0,
) -> MlpParams:
    """
    Create a network with weights uniform in +-1/sqrt(fan_in).

    Args:
        sizes: Widths including input and output, e.g. [in, 64, 64, out]
        rng: Generator used for every draw (determinism)
        output_activation: 'none' or 'tanh'
        final_scale: Multiplier on the last layer (0.1 for actors and f,
            which starts predictions near zero)

    Returns:
        Freshly initialized MlpParams
    """
    if len(sizes) < 2:
        raise ShapeError(f"need at least input and output sizes, got {list(sizes)}")
    layers = []
    n_layers = len(sizes) - 1
    for k in range(n_layers):
        fan_in, fan_out = int(sizes[k]), int(sizes[k + 1])
        bound = 1.0 / np.sqrt(fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        bias = rng.uniform(-bound, bound, size=fan_out)
        if k == n_layers - 1:
            weight = weight * final_scale
            bias = bias * final_scale
        layers.append(Layer(weight, bias))
    logger.debug(f"Initialized MLP {list(sizes)} (output={output_activation})")
    return MlpParams(layers, RELU, output_activation)


# ============================================================================
# Forward / Backward
# ============================================================================

def _as_batch(x: np.ndarray) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim == 2:
        return arr, False
    raise ShapeError(f"network input must be 1-D or 2-D, got shape {arr.shape}")


def _forward_trace(params: MlpParams, batch: np.ndarray):
    """Forward pass keeping every layer input, pre-activation and output."""
    check_dim(batch.shape[1], params.in_dim, "network input")
    inputs, pre, post = [], [], []
    h = batch
    for k, layer in enumerate(params.layers):
        inputs.append(h)
        z = h @ layer.weight.T + layer.bias
        h = _activate(z, params.activation_of(k))
        pre.append(z)
        post.append(h)
    return inputs, pre, post


def mlp_forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """
    Evaluate the network.

    Raises:
        ShapeError: If the input width differs from the first layer's input
    """
    batch, single = _as_batch(x)
    _, _, post = _forward_trace(params, batch)
    out = post[-1]
    return out[0] if single else out


def mlp_backward(
    params: MlpParams,
    x: np.ndarray,
    upstream: np.ndarray,
) -> Tuple[MlpParams, np.ndarray]:
    """
    Exact gradients of <upstream, output> w.r.t. every parameter and the input.

    For batched input the parameter gradients are summed over the batch and
    the input gradient keeps one row per sample.

    Raises:
        ShapeError: If input or upstream widths do not match the network
    """
    batch, single = _as_batch(x)
    up = np.asarray(upstream, dtype=float)
    up = up[None, :] if up.ndim == 1 else up
    check_dim(up.shape[1], params.out_dim, "upstream gradient")
    if up.shape[0] != batch.shape[0]:
        raise ShapeError(
            f"upstream batch size {up.shape[0]} does not match input batch size {batch.shape[0]}"
        )

    inputs, pre, post = _forward_trace(params, batch)
    grads: List[np.ndarray] = [np.empty(0)] * (2 * len(params.layers))
    delta = up
    for k in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[k]
        delta = delta * _activation_slope(pre[k], post[k], params.activation_of(k))
        grads[2 * k] = delta.T @ inputs[k]
        grads[2 * k + 1] = delta.sum(axis=0)
        delta = delta @ layer.weight

    input_grad = delta[0] if single else delta
    return params.with_arrays(grads), input_grad
