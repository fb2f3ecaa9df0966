"""Training-sample synthesis for single- and multi-landmark models."""

from typing import Optional, Sequence

import numpy as np
from scipy.stats import truncnorm

from models.network import TrainingSample
from models.shape import ShapeModel
from models.volume import LandmarkSet, Volume
from network.labels import gt_label, one_hot
from network.patches import extract_patch, extract_patch_block

B_TRUNCATION = 3.0


def sample_position(dims: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Continuous uniform point over ``[-0.5, dim - 0.5)`` per axis.

    After rounding to the nearest voxel every voxel is equally likely.
    """
    upper = np.asarray(dims, dtype=np.float64) - 0.5
    return rng.uniform(-0.5, upper)


def sample_b(
    shape_model: ShapeModel, rng: np.random.Generator, multiplier: float = 1.0
) -> np.ndarray:
    """Per-mode ``Normal(0, multiplier * sqrt(eigenvalue))`` truncated at ``+/-3 sqrt(eigenvalue)``."""
    limits = shape_model.mode_limits(B_TRUNCATION)
    b = np.zeros(shape_model.n_modes, dtype=np.float64)
    live = limits > 0
    if np.any(live):
        bound = B_TRUNCATION / multiplier
        draws = truncnorm.rvs(-bound, bound, size=int(live.sum()), random_state=rng)
        b[live] = draws * multiplier * limits[live] / B_TRUNCATION
    return b


def make_sample_single(
    volume: Volume,
    x_gt: Sequence[float],
    side: int,
    rng: np.random.Generator,
    position: Optional[np.ndarray] = None,
) -> TrainingSample:
    """Patch at a random point with its displacement to ``x_gt`` and direction class."""
    target = np.asarray(x_gt, dtype=np.float64)
    x = sample_position(volume.dims, rng) if position is None else np.asarray(position, float)
    d_gt = target - x
    label = gt_label(d_gt)
    return TrainingSample(
        patch=extract_patch(volume, x, side),
        d_gt=d_gt,
        p_gt=one_hot(label, 2 * len(d_gt)),
        position=x,
    )


def make_sample_multi(
    volume: Volume,
    landmarks_gt: LandmarkSet,
    shape_model: ShapeModel,
    side: int,
    rng: np.random.Generator,
    multiplier: float = 1.0,
    b: Optional[np.ndarray] = None,
) -> TrainingSample:
    """Patch block at the shape for a sampled ``b``; the target is ``b_gt - b``."""
    b_gt = shape_model.to_b(landmarks_gt.flatten())
    b_start = sample_b(shape_model, rng, multiplier) if b is None else np.asarray(b, float)
    shape = LandmarkSet.from_flat(shape_model.to_x(b_start))
    d_gt = b_gt - b_start
    label = gt_label(d_gt)
    return TrainingSample(
        patch=extract_patch_block(volume, shape, side),
        d_gt=d_gt,
        p_gt=one_hot(label, 2 * len(d_gt)),
        position=b_start,
    )
