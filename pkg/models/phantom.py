"""Phantom generation settings and poses."""

from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np
from scipy.spatial.transform import Rotation

Vec3 = Tuple[float, float, float]

# Farthest canonical landmark from the centre at 64^3 (voxels).
REFERENCE_EXTENT = 14.0

# Blob sigma per landmark at the reference extent; larger blobs go to the
# landmarks with the farthest nearest neighbour.
BLOB_SIGMAS = np.array([2.15, 2.0, 1.7, 3.0, 2.6, 2.3, 2.8, 1.5, 1.85, 2.45])

# Shell profile width at the reference extent (voxels).
SHELL_WIDTH = 1.0


@dataclass(frozen=True)
class PhantomConfig:
    """Synthetic volume settings; the pose ranges are symmetric about identity."""

    dims: Tuple[int, int, int] = (64, 64, 64)
    spacing: float = 0.5
    n_landmarks: int = 10
    translation_range: float = 8.0  # voxels, +/- per axis
    rotation_range_deg: float = 20.0  # degrees, +/- per axis
    scale_min: float = 0.85
    scale_max: float = 1.15
    noise_sigma: float = 0.05
    seed: int = 0

    @classmethod
    def identity(cls, **overrides) -> "PhantomConfig":
        """Zero pose ranges and no noise: landmarks sit at the canonical layout."""
        values = dict(
            translation_range=0.0,
            rotation_range_deg=0.0,
            scale_min=1.0,
            scale_max=1.0,
            noise_sigma=0.0,
        )
        values.update(overrides)
        return cls(**values)

    @property
    def canonical_extent(self) -> float:
        """Farthest canonical landmark distance from the centre (voxels).

        14 voxels at 64^3, scaled with the smallest volume extent.
        """
        return REFERENCE_EXTENT * min(self.dims) / 64.0

    @property
    def scene_scale(self) -> float:
        """Canonical-scene scale relative to 64^3; blobs and shell grow with it."""
        return self.canonical_extent / REFERENCE_EXTENT

    @property
    def blob_sigmas(self) -> np.ndarray:
        """Canonical blob sigma per landmark (voxels)."""
        return BLOB_SIGMAS[: self.n_landmarks] * self.scene_scale

    @property
    def shell_width(self) -> float:
        return SHELL_WIDTH * self.scene_scale

    @property
    def centre(self) -> np.ndarray:
        return (np.asarray(self.dims, dtype=np.float64) - 1.0) / 2.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PhantomPose:
    """Rotation (extrinsic xyz Euler angles), per-axis scale and translation.

    A canonical offset ``p`` lands at ``centre + R @ diag(scale) @ p + translation``.
    """

    rotation_deg: Vec3 = (0.0, 0.0, 0.0)
    scale: Vec3 = (1.0, 1.0, 1.0)
    translation: Vec3 = (0.0, 0.0, 0.0)

    def linear(self) -> np.ndarray:
        """The 3x3 linear part ``R @ diag(scale)``."""
        rotation = Rotation.from_euler("xyz", self.rotation_deg, degrees=True)
        return rotation.as_matrix() @ np.diag(np.asarray(self.scale, dtype=np.float64))

    def apply(self, offsets: np.ndarray, centre: np.ndarray) -> np.ndarray:
        """Map ``[n, 3]`` canonical offsets to voxel coordinates."""
        moved = offsets @ self.linear().T
        return moved + centre + np.asarray(self.translation, dtype=np.float64)

    def to_dict(self) -> dict:
        return asdict(self)
