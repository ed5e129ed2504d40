"""
Minimal neural-network toolkit on numpy.

Modules:
    mlp: Fully connected networks with explicit forward and backward passes
    optim: Adam
    target: Polyak-averaged target copies
    checkpoint: Binary network serialization
"""

from tdm_lab.nn.checkpoint import load_params, params_from_bytes, params_to_bytes, save_params
from tdm_lab.nn.mlp import NONE, RELU, TANH, Layer, MlpParams, init_mlp, mlp_backward, mlp_forward
from tdm_lab.nn.optim import AdamState, adam_step
from tdm_lab.nn.target import TargetCopy, polyak_update

__all__ = [
    'RELU',
    'TANH',
    'NONE',
    'Layer',
    'MlpParams',
    'init_mlp',
    'mlp_forward',
    'mlp_backward',
    'AdamState',
    'adam_step',
    'TargetCopy',
    'polyak_update',
    'params_to_bytes',
    'params_from_bytes',
    'save_params',
    'load_params',
]
