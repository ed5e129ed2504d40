"""
Polyak-averaged target copies of networks.
"""

from dataclasses import dataclass

from tdm_lab.core.models import ShapeError
from tdm_lab.nn.mlp import MlpParams
from tdm_lab.utils.validation import check_range


@dataclass
class TargetCopy:
    """A slow-moving snapshot of a source network."""

    params: MlpParams
    rho: float = 0.999

    def __post_init__(self):
        check_range(self.rho, 0.0, 1.0, "polyak coefficient")

    @classmethod
    def of(cls, source: MlpParams, rho: float) -> "TargetCopy":
        """Start a target as an exact copy of ``source``."""
        return cls(source.copy(), rho)


def polyak_update(target: TargetCopy, source: MlpParams) -> TargetCopy:
    """
    Every target parameter <- rho * target + (1 - rho) * source.

    Raises:
        ShapeError: If the networks are not shape-identical
    """
    if not target.params.same_structure(source):
        raise ShapeError(
            f"target shape {target.params.sizes} does not match source {source.sizes}"
        )
    rho = target.rho
    mixed = [
        rho * t + (1.0 - rho) * s
        for t, s in zip(target.params.arrays(), source.arrays())
    ]
    return TargetCopy(target.params.with_arrays(mixed), rho)
