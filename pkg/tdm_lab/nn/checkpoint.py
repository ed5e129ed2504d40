"""
Network checkpoint serialization.

File layout:

    <in> <out> <activation>      one text line per layer
    <blank line>
    little-endian float64 stream: W0 (row-major), b0, W1, b1, ...

The header alone is enough to rebuild the network structure.
"""

import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np

from tdm_lab.core.models import ShapeError
from tdm_lab.nn.mlp import HIDDEN_ACTIVATIONS, Layer, MlpParams
from tdm_lab.utils.validation import validate_file_exists

logger = logging.getLogger(__name__)

_HEADER_END = b"\n\n"


def params_to_bytes(params: MlpParams) -> bytes:
    """Serialize a network to the checkpoint byte layout."""
    lines = [
        f"{layer.in_dim} {layer.out_dim} {params.activation_of(k)}"
        for k, layer in enumerate(params.layers)
    ]
    header = ("\n".join(lines)).encode("ascii") + _HEADER_END
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in params.arrays())
    return header + body


def params_from_bytes(blob: bytes) -> MlpParams:
    """
    Rebuild a network from checkpoint bytes.

    Raises:
        ShapeError: If the header is malformed or the stream length disagrees
    """
    split = blob.find(_HEADER_END)
    if split < 0:
        raise ShapeError("checkpoint header terminator not found")
    header = blob[:split].decode("ascii").splitlines()
    body = blob[split + len(_HEADER_END):]

    shapes: List[Tuple[int, int]] = []
    activations: List[str] = []
    for line_no, line in enumerate(header, start=1):
        parts = line.split()
        if len(parts) != 3:
            raise ShapeError(f"checkpoint header line {line_no} malformed: {line!r}")
        shapes.append((int(parts[0]), int(parts[1])))
        activations.append(parts[2])

    expected = sum(o * i + o for i, o in shapes) * 8
    if len(body) != expected:
        raise ShapeError(f"checkpoint stream holds {len(body)} bytes, header implies {expected}")

    flat = np.frombuffer(body, dtype="<f8").astype(float)
    layers, offset = [], 0
    for in_dim, out_dim in shapes:
        weight = flat[offset:offset + in_dim * out_dim].reshape(out_dim, in_dim).copy()
        offset += in_dim * out_dim
        bias = flat[offset:offset + out_dim].copy()
        offset += out_dim
        layers.append(Layer(weight, bias))

    hidden = activations[0] if len(activations) > 1 else HIDDEN_ACTIVATIONS[0]
    return MlpParams(layers, hidden, activations[-1])


def save_params(path: Path, params: MlpParams) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(params_to_bytes(params))
    logger.debug(f"Saved network {params.sizes} to {path}")


def load_params(path: Path) -> MlpParams:
    path = validate_file_exists(Path(path), "checkpoint")
    params = params_from_bytes(path.read_bytes())
    logger.debug(f"Loaded network {params.sizes} from {path}")
    return params
