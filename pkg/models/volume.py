"""Volume and landmark containers."""

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from core.errors import ShapeError

Dims = Tuple[int, int, int]
Spacing = Tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class Volume:
    """3D scalar intensity grid indexed ``[x, y, z]`` with mm/voxel spacing."""

    intensities: np.ndarray
    spacing: Spacing = (0.5, 0.5, 0.5)

    def __post_init__(self):
        if self.intensities.ndim != 3:
            raise ShapeError("Volume", "[x, y, z]", self.intensities.shape)
        if any(d < 1 for d in self.intensities.shape):
            raise ValueError(f"Volume dims must be positive, got {self.dims}")
        if len(self.spacing) != 3 or any(s <= 0 for s in self.spacing):
            raise ValueError(f"Volume spacing must be 3 positive floats, got {self.spacing}")
        if not np.isfinite(self.intensities).all():
            raise ValueError("Volume intensities must be finite")
        # frozen after load
        self.intensities.setflags(write=False)

    @classmethod
    def create(
        cls, intensities: np.ndarray, spacing: Sequence[float] = (0.5, 0.5, 0.5)
    ) -> "Volume":
        """Create a volume, coercing intensities and spacing to 32-bit floats."""
        data = np.array(intensities, dtype=np.float32, copy=True)
        # spacing is stored as float32 on disk
        sx, sy, sz = (float(np.float32(s)) for s in spacing)
        return cls(intensities=data, spacing=(sx, sy, sz))

    @property
    def dims(self) -> Dims:
        x, y, z = self.intensities.shape
        return int(x), int(y), int(z)

    def voxel_to_mm(self, point: Sequence[float]) -> np.ndarray:
        return voxel_to_mm(point, self.spacing)


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Ordered landmarks as continuous voxel coordinates, shape ``[n_l, 3]``."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ShapeError("LandmarkSet", "[n_l, 3]", self.points.shape)
        if not np.isfinite(self.points).all():
            raise ValueError("Landmark coordinates must be finite")
        self.points.setflags(write=False)

    @classmethod
    def create(cls, points: Sequence[Sequence[float]]) -> "LandmarkSet":
        return cls(points=np.array(points, dtype=np.float64, copy=True).reshape(-1, 3))

    @classmethod
    def from_flat(cls, flat: Sequence[float]) -> "LandmarkSet":
        """Inverse of ``flatten``: ``(x1, y1, z1, ..., xn, yn, zn)``."""
        flat_array = np.asarray(flat, dtype=np.float64)
        if flat_array.ndim != 1 or flat_array.size % 3 != 0:
            raise ShapeError("LandmarkSet.from_flat", "[3 * n_l]", flat_array.shape)
        return cls.create(flat_array.reshape(-1, 3))

    @property
    def n_landmarks(self) -> int:
        return int(self.points.shape[0])

    def flatten(self) -> np.ndarray:
        """Flattened vector ``(x1, y1, z1, ..., xn, yn, zn)`` of length ``3 * n_l``."""
        return self.points.reshape(-1).copy()

    def point(self, index: int) -> np.ndarray:
        return self.points[index].copy()

    def __len__(self) -> int:
        return self.n_landmarks


def voxel_to_mm(point: Sequence[float], spacing: Sequence[float]) -> np.ndarray:
    """Convert continuous voxel coordinates to millimetres (componentwise)."""
    spacing_array = np.asarray(spacing, dtype=np.float64)
    if np.any(spacing_array <= 0):
        raise ValueError(f"spacing must be positive, got {tuple(spacing)}")
    return np.asarray(point, dtype=np.float64) * spacing_array
