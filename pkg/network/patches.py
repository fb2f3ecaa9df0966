"""2.5D patch extraction: three orthogonal crops through a point."""

from typing import Sequence

import numpy as np

from core.errors import NonFiniteError, ShapeError
from models.patch import PatchStack
from models.volume import LandmarkSet, Volume
from validation.config_validator import validate_patch_side


def round_half_up(point: Sequence[float]) -> np.ndarray:
    """Nearest voxel centre; halves round towards +inf."""
    return np.floor(np.asarray(point, dtype=np.float64) + 0.5).astype(np.int64)


def _crop(plane: np.ndarray, c0: int, c1: int, side: int) -> np.ndarray:
    """``side x side`` crop of a 2D array centred at (c0, c1); zero outside."""
    half = side // 2
    out = np.zeros((side, side), dtype=np.float32)
    lo0, lo1 = c0 - half, c1 - half
    src0 = slice(max(lo0, 0), min(lo0 + side, plane.shape[0]))
    src1 = slice(max(lo1, 0), min(lo1 + side, plane.shape[1]))
    if src0.start >= src0.stop or src1.start >= src1.stop:
        return out
    out[src0.start - lo0 : src0.stop - lo0, src1.start - lo1 : src1.stop - lo1] = plane[
        src0, src1
    ]
    return out


def _check_side(side: int) -> None:
    is_valid, _ = validate_patch_side(side)
    if not is_valid:
        raise ShapeError("extract_patch", "odd positive side", (side,))


def extract_patch(volume: Volume, x: Sequence[float], side: int) -> PatchStack:
    """Axial, coronal and sagittal crops through the voxel nearest ``x``.

    ``x`` may lie outside the volume; reads outside the volume are zero.
    """
    _check_side(side)
    point = np.asarray(x, dtype=np.float64)
    if point.shape != (3,):
        raise ShapeError("extract_patch point", (3,), point.shape)
    if not np.isfinite(point).all():
        raise NonFiniteError("patch centre")

    vx, vy, vz = (int(v) for v in round_half_up(point))
    data = volume.intensities
    nx, ny, nz = volume.dims
    channels = np.zeros((side, side, 3), dtype=np.float32)
    if 0 <= vz < nz:
        channels[:, :, 0] = _crop(data[:, :, vz], vx, vy, side)
    if 0 <= vy < ny:
        channels[:, :, 1] = _crop(data[:, vy, :], vx, vz, side)
    if 0 <= vx < nx:
        channels[:, :, 2] = _crop(data[vx, :, :], vy, vz, side)
    return PatchStack(channels)


def extract_patch_block(volume: Volume, landmarks: LandmarkSet, side: int) -> PatchStack:
    """Per-landmark 3-channel groups concatenated in landmark order."""
    _check_side(side)
    groups = [extract_patch(volume, p, side).data for p in landmarks.points]
    return PatchStack(np.concatenate(groups, axis=-1))
