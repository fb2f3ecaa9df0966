"""2.5D patch stack model."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from core.errors import ShapeError


class Plane(Enum):
    """Orthogonal planes in channel order within each point's 3-channel group."""

    AXIAL = "axial"  # xy at fixed z
    CORONAL = "coronal"  # xz at fixed y
    SAGITTAL = "sagittal"  # yz at fixed x

    def __str__(self):
        return self.value


PLANE_ORDER = (Plane.AXIAL, Plane.CORONAL, Plane.SAGITTAL)


@dataclass(frozen=True, eq=False)
class PatchStack:
    """``s x s x 3k`` channel stack of orthogonal crops for ``k`` points."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[0] != self.data.shape[1]:
            raise ShapeError("PatchStack", "[s, s, 3k]", self.data.shape)
        if self.data.shape[0] % 2 == 0:
            raise ShapeError("PatchStack", "odd side s", self.data.shape)
        if self.data.shape[2] % 3 != 0 or self.data.shape[2] == 0:
            raise ShapeError("PatchStack", "channels a positive multiple of 3", self.data.shape)

    @property
    def side(self) -> int:
        return int(self.data.shape[0])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    @property
    def n_points(self) -> int:
        return self.channels // 3

    def point_channels(self, index: int) -> np.ndarray:
        """The 3-channel group (axial, coronal, sagittal) of point ``index``."""
        return self.data[:, :, 3 * index : 3 * index + 3]
