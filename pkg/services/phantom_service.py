"""Synthetic phantom volumes with analytically known landmarks."""

import hashlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import ConfigError, PhantomGenerationError
from lib_logging.logger import get_logger
from models.dataset import ManifestEntry, Split
from models.phantom import PhantomConfig, PhantomPose
from models.volume import LandmarkSet, Volume
from storage.dataset_storage import write_manifest
from storage.landmark_storage import write_landmarks
from storage.volume_storage import write_volume
from validation.config_validator import LANDMARK_MARGIN, validate_phantom_config

logger = get_logger(__name__)

MAX_POSE_ATTEMPTS = 100
TRAIN_FRACTION = 0.7

# Unit-scale canonical layout; no two points share a symmetry plane of the
# ellipsoid and the closest pair is 0.636 apart.
UNIT_LAYOUT = np.array(
    [
        [0.70, 0.20, -0.25],
        [-0.55, 0.45, 0.10],
        [0.15, -0.80, 0.30],
        [-0.30, -0.35, -0.70],
        [0.40, 0.60, 0.55],
        [-0.75, -0.15, 0.40],
        [0.05, 0.35, -0.85],
        [0.55, -0.45, -0.05],
        [-0.20, 0.85, -0.30],
        [0.30, -0.10, 0.80],
    ]
)

BLOB_AMPLITUDE = 0.8
INTERIOR_LEVEL = 0.1
SHELL_LEVEL = 0.6
ELLIPSOID_AXES = np.array([1.45, 1.3, 1.2])


def canonical_offsets(config: PhantomConfig) -> np.ndarray:
    """Canonical landmark offsets from the volume centre, ``[n_l, 3]`` voxels."""
    return UNIT_LAYOUT[: config.n_landmarks] * config.canonical_extent


def sample_pose(config: PhantomConfig, rng: np.random.Generator) -> PhantomPose:
    rotation = rng.uniform(-config.rotation_range_deg, config.rotation_range_deg, 3)
    scale = rng.uniform(config.scale_min, config.scale_max, 3)
    translation = rng.uniform(-config.translation_range, config.translation_range, 3)
    return PhantomPose(
        rotation_deg=tuple(float(v) for v in rotation),
        scale=tuple(float(v) for v in scale),
        translation=tuple(float(v) for v in translation),
    )


def landmarks_inside(points: np.ndarray, dims: Sequence[int], margin: float) -> bool:
    upper = np.asarray(dims, dtype=np.float64) - 1.0 - margin
    return bool(np.all(points >= margin) and np.all(points <= upper))


def render_phantom(
    config: PhantomConfig,
    pose: PhantomPose,
    noise_rng: Optional[np.random.Generator] = None,
) -> Tuple[Volume, LandmarkSet]:
    """Render the canonical scene under ``pose``.

    Intensities: 0 outside the ellipsoid, a flat interior, a Gaussian-profile
    shell and one Gaussian blob per landmark, all defined in canonical space so
    every blob peak maps exactly onto its landmark.
    """
    offsets = canonical_offsets(config)
    centre = config.centre
    landmarks = pose.apply(offsets, centre)

    linear = pose.linear()
    inverse = np.linalg.inv(linear)
    axes = [np.arange(d, dtype=np.float64) for d in config.dims]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    shifted = grid - centre - np.asarray(pose.translation, dtype=np.float64)
    canonical = shifted @ inverse.T

    radii = ELLIPSOID_AXES * config.canonical_extent
    ellipsoid_r = np.sqrt(np.sum((canonical / radii) ** 2, axis=-1))
    shell_distance = (ellipsoid_r - 1.0) * float(np.mean(radii))
    intensity = np.where(ellipsoid_r < 1.0, INTERIOR_LEVEL, 0.0)
    shell = np.exp(-(shell_distance**2) / (2 * config.shell_width**2))
    intensity = intensity + SHELL_LEVEL * shell

    for offset, sigma in zip(offsets, config.blob_sigmas):
        sq = np.sum((canonical - offset) ** 2, axis=-1)
        intensity += BLOB_AMPLITUDE * np.exp(-sq / (2.0 * sigma * sigma))

    if config.noise_sigma > 0:
        if noise_rng is None:
            raise ValueError("noise_sigma > 0 needs a noise generator")
        intensity = intensity + noise_rng.normal(0.0, config.noise_sigma, intensity.shape)
    intensity = np.clip(intensity, 0.0, 1.0)

    volume = Volume.create(intensity, (config.spacing,) * 3)
    return volume, LandmarkSet.create(landmarks)


def generate_phantom(config: PhantomConfig, index: int) -> Tuple[Volume, LandmarkSet]:
    """Deterministic phantom for ``(config.seed, index)``.

    Raises:
        ConfigError: invalid phantom settings
        PhantomGenerationError: no in-bounds pose after 100 draws
    """
    is_valid, error_msg = validate_phantom_config(config)
    if not is_valid:
        logger.warning(f"Phantom config rejected: {error_msg}")
        raise ConfigError(error_msg)

    pose_seq, noise_seq = np.random.SeedSequence([config.seed, index]).spawn(2)
    pose_rng = np.random.default_rng(pose_seq)
    offsets = canonical_offsets(config)
    for attempt in range(1, MAX_POSE_ATTEMPTS + 1):
        pose = sample_pose(config, pose_rng)
        if landmarks_inside(pose.apply(offsets, config.centre), config.dims, LANDMARK_MARGIN):
            break
        logger.debug(f"Phantom {index}: pose attempt {attempt} rejected")
    else:
        raise PhantomGenerationError(
            f"Phantom {index}: no in-bounds pose after {MAX_POSE_ATTEMPTS} attempts"
        )
    return render_phantom(config, pose, np.random.default_rng(noise_seq))


def split_indices(count: int, seed: int) -> List[Split]:
    """Deterministic 70/30 split: indices ranked by a hash of ``(seed, index)``."""
    if count < 2:
        raise ConfigError(f"Dataset needs at least 2 cases to split, got {count}")
    n_train = min(max(int(np.floor(TRAIN_FRACTION * count + 0.5)), 1), count - 1)
    ranked = sorted(
        range(count),
        key=lambda i: hashlib.sha256(f"{seed}:{i}".encode("ascii")).hexdigest(),
    )
    train = set(ranked[:n_train])
    return [Split.TRAIN if i in train else Split.TEST for i in range(count)]


def generate_dataset(
    config: PhantomConfig,
    count: int,
    out_dir: Union[str, Path],
    threads: int = 1,
) -> List[ManifestEntry]:
    """Write ``count`` phantoms, their landmark CSVs and ``manifest.csv``."""
    splits = split_indices(count, config.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def write_case(index: int) -> ManifestEntry:
        volume, landmarks = generate_phantom(config, index)
        volume_name = f"case_{index:04d}.pinv"
        landmarks_name = f"case_{index:04d}.csv"
        write_volume(volume, out / volume_name)
        write_landmarks(landmarks, out / landmarks_name)
        return ManifestEntry(index, volume_name, landmarks_name, splits[index])

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        entries = list(pool.map(write_case, range(count)))

    write_manifest(entries, out / "manifest.csv")
    n_train = sum(1 for e in entries if e.split == Split.TRAIN)
    logger.info(
        f"Generated {count} phantoms in {out} ({n_train} train, {count - n_train} test)",
        extra={"extra_data": config.to_dict()},
    )
    return entries


def refine_peak(volume: Volume, voxel: Sequence[int]) -> np.ndarray:
    """Sub-voxel peak location from a quadratic fit of log-intensity.

    Fits ``c + g.u + u^T H u / 2`` over the 3x3x3 neighbourhood of ``voxel``
    and returns ``voxel - H^-1 g``; falls back to ``voxel`` when the fit is not
    a maximum or the neighbourhood leaves the volume.
    """
    centre = np.asarray(voxel, dtype=np.int64)
    dims = np.asarray(volume.dims)
    if np.any(centre < 1) or np.any(centre > dims - 2):
        return centre.astype(np.float64)

    x, y, z = centre
    block = volume.intensities[x - 1 : x + 2, y - 1 : y + 2, z - 1 : z + 2].astype(np.float64)
    values = np.log(np.maximum(block, 1e-6)).reshape(-1)
    u = np.stack(
        np.meshgrid(*([np.array([-1.0, 0.0, 1.0])] * 3), indexing="ij"), axis=-1
    ).reshape(-1, 3)
    design = np.column_stack(
        [
            np.ones(len(u)),
            u,
            u[:, 0] ** 2,
            u[:, 1] ** 2,
            u[:, 2] ** 2,
            u[:, 0] * u[:, 1],
            u[:, 0] * u[:, 2],
            u[:, 1] * u[:, 2],
        ]
    )
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    gradient = coef[1:4]
    hessian = np.array(
        [
            [2 * coef[4], coef[7], coef[8]],
            [coef[7], 2 * coef[5], coef[9]],
            [coef[8], coef[9], 2 * coef[6]],
        ]
    )
    if np.any(np.linalg.eigvalsh(hessian) >= 0):
        return centre.astype(np.float64)
    step = -np.linalg.solve(hessian, gradient)
    return centre + np.clip(step, -1.0, 1.0)
