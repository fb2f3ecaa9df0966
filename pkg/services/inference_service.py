"""Iterative landmark inference with update rules A, B and C."""

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from core.errors import ConfigError, InferenceError
from lib_logging.logger import get_logger
from lib_logging.metrics import RunMetrics
from models.inference import InferenceConfig, UpdateRule
from models.network import NetworkOutput
from models.shape import ShapeModel
from models.volume import LandmarkSet, Volume
from network.patches import extract_patch, extract_patch_block
from network.pin_network import PinNetwork
from network.samples import sample_b
from storage.atomic import atomic_write_text
from storage.checkpoint_storage import load_checkpoint
from validation.config_validator import validate_inference_config

logger = get_logger(__name__)

# 6 face + 12 edge directions of the 3x3x3 stencil
START_DIRECTIONS = np.array(
    [
        d
        for d in np.ndindex(3, 3, 3)
        if 1 <= sum(abs(c - 1) for c in d) <= 2
    ],
    dtype=np.float64,
) - 1.0


class Predictor(Protocol):
    """Anything that maps a batch of patches to ``(d [n, n_o], P [n, 2 n_o])``.

    ``positions`` holds the current point (or ``b``) of every row; networks
    ignore it, oracle predictors in tests use it.
    """

    def predict(
        self, patches: np.ndarray, positions: Optional[np.ndarray] = None
    ) -> Tuple[np.ndarray, np.ndarray]: ...


@dataclass(eq=False)
class InferenceResult:
    """Averaged prediction plus the per-start finals and the averaged starts."""

    prediction: np.ndarray
    initial: np.ndarray
    finals: np.ndarray
    iterations: List[int]
    trajectory: List[Tuple] = field(default_factory=list)


def apply_rule(rule: UpdateRule, position: np.ndarray, output: NetworkOutput) -> np.ndarray:
    """New position(s) after one update; rows of a batch are independent.

    A: one unit along the most probable direction class (first class wins ties).
    B: ``position + d``.
    C: ``position + P_max * d`` with ``P_max[i] = max(P[2i], P[2i + 1])``.
    """
    x = np.asarray(position, dtype=np.float64)
    d = np.asarray(output.d, dtype=np.float64)
    P = np.asarray(output.P, dtype=np.float64)
    if d.shape != x.shape or P.shape != x.shape[:-1] + (2 * x.shape[-1],):
        raise InferenceError(
            f"network output shapes d{d.shape}, P{P.shape} do not match position {x.shape}"
        )
    if rule is UpdateRule.A:
        winner = np.argmax(P, axis=-1)
        step = np.zeros_like(x)
        sign = np.where(winner % 2 == 0, 1.0, -1.0)
        np.put_along_axis(
            step, np.expand_dims(winner // 2, -1), np.expand_dims(sign, -1), axis=-1
        )
        return x + step
    if rule is UpdateRule.B:
        return x + d
    p_max = P.reshape(P.shape[:-1] + (x.shape[-1], 2)).max(axis=-1)
    return x + p_max * d


def init_points_single(dims: Sequence[int]) -> np.ndarray:
    """Volume centre plus 18 stencil starts at a quarter extent, clamped inside."""
    extent = np.asarray(dims, dtype=np.float64)
    if extent.shape != (3,) or np.any(extent < 4):
        raise ConfigError(f"Start layout needs 3 dims >= 4, got {tuple(dims)}")
    centre = np.floor(extent / 2.0)
    quarter = np.floor(extent / 4.0)
    points = np.vstack([centre, centre + START_DIRECTIONS * quarter])
    return np.clip(points, 0.0, extent - 1.0)


def init_b_multi(
    shape_model: ShapeModel, n_random: int, rng: np.random.Generator
) -> np.ndarray:
    """Zero vector first, then ``n_random`` truncated-normal draws in b-space."""
    if n_random < 0:
        raise ConfigError(f"n_random must be >= 0, got {n_random}")
    starts = [np.zeros(shape_model.n_modes)]
    starts.extend(sample_b(shape_model, rng) for _ in range(n_random))
    return np.vstack(starts)


def _iterate(
    predictor: Predictor,
    starts: np.ndarray,
    patches_at,
    config: InferenceConfig,
    clamp_upper: Optional[np.ndarray],
    metrics: Optional[RunMetrics],
) -> InferenceResult:
    """Run every start for T updates (or until its update norm drops below epsilon)."""
    positions = np.array(starts, dtype=np.float64, copy=True)
    n_starts, width = positions.shape
    active = np.ones(n_starts, dtype=bool)
    iterations = [0] * n_starts
    epsilon = config.effective_epsilon
    trajectory: List[Tuple] = []
    if config.record_trajectory:
        trajectory.extend((k, 0, *positions[k], 0.0) for k in range(n_starts))

    for t in range(1, config.T + 1):
        rows = np.nonzero(active)[0]
        if rows.size == 0:
            break
        current = positions[rows]
        d, P = predictor.predict(patches_at(current), current)
        updated = apply_rule(config.rule, current, NetworkOutput(d=np.asarray(d), P=np.asarray(P)))
        if clamp_upper is not None:
            updated = np.clip(updated, 0.0, clamp_upper)
        for k, row in enumerate(rows):
            if not np.isfinite(updated[k]).all():
                raise InferenceError(f"Non-finite position from start {row} at iteration {t}")
        norms = np.linalg.norm(updated - current, axis=1)
        positions[rows] = updated
        for k, row in enumerate(rows):
            iterations[row] = t
            if config.record_trajectory:
                trajectory.append((int(row), t, *updated[k], float(norms[k])))
            if epsilon > 0 and norms[k] < epsilon:
                active[row] = False
        if metrics is not None:
            metrics.inference_iterations.labels(rule=str(config.rule)).inc(len(rows))
            metrics.patches_extracted.inc(len(rows))

    return InferenceResult(
        prediction=positions.mean(axis=0),
        initial=np.asarray(starts, dtype=np.float64).mean(axis=0),
        finals=positions,
        iterations=iterations,
        trajectory=trajectory,
    )


def _check_config(config: InferenceConfig) -> None:
    is_valid, error_msg = validate_inference_config(config)
    if not is_valid:
        logger.warning(f"Inference config rejected: {error_msg}")
        raise ConfigError(error_msg)


def infer_single(
    predictor: Predictor,
    volume: Volume,
    side: int,
    config: InferenceConfig,
    metrics: Optional[RunMetrics] = None,
) -> InferenceResult:
    """Predict one landmark from the 19 starts; ``prediction`` is their mean final point."""
    _check_config(config)
    starts = init_points_single(volume.dims)
    upper = np.asarray(volume.dims, dtype=np.float64) - 1.0

    def patches_at(points: np.ndarray) -> np.ndarray:
        return np.stack([extract_patch(volume, p, side).data for p in points])

    result = _iterate(predictor, starts, patches_at, config, upper, metrics)
    logger.debug(
        f"Single inference rule {config.rule}: prediction {result.prediction.tolist()}"
    )
    return result


def infer_multi(
    predictor: Predictor,
    shape_model: ShapeModel,
    volume: Volume,
    side: int,
    config: InferenceConfig,
    metrics: Optional[RunMetrics] = None,
) -> InferenceResult:
    """Joint inference in b-space; ``prediction`` holds the flattened landmarks.

    b is never clamped so every prediction stays in the shape subspace.
    """
    _check_config(config)
    n_o = getattr(predictor, "n_o", shape_model.n_modes)
    if n_o != shape_model.n_modes:
        raise InferenceError(
            f"Checkpoint predicts {n_o} modes but the shape model has {shape_model.n_modes}"
        )
    rng = np.random.default_rng(config.seed)
    starts = init_b_multi(shape_model, config.n_random_inits_multi, rng)

    def patches_at(bs: np.ndarray) -> np.ndarray:
        return np.stack(
            [
                extract_patch_block(
                    volume, LandmarkSet.from_flat(shape_model.to_x(b)), side
                ).data
                for b in bs
            ]
        )

    result = _iterate(predictor, starts, patches_at, config, None, metrics)
    b_mean = result.prediction
    result.prediction = shape_model.to_x(b_mean)
    result.initial = shape_model.to_x(result.initial)
    logger.debug(f"Multi inference rule {config.rule}: b {b_mean.tolist()}")
    return result


def write_trajectory(trajectory: List[Tuple], width: int, path: Union[str, Path]) -> None:
    """CSV of ``start_index,iteration,<position components>,update_norm``."""
    names = ["x", "y", "z"] if width == 3 else [f"b{i}" for i in range(width)]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["start_index", "iteration", *names, "update_norm"])
    for row in trajectory:
        writer.writerow([row[0], row[1], *(repr(float(v)) for v in row[2:])])
    atomic_write_text(Path(path), buffer.getvalue())


class InferenceService:
    """Loads checkpoints and runs single or joint inference on volumes."""

    def __init__(self, metrics: Optional[RunMetrics] = None):
        self.metrics = metrics

    def load_network(self, checkpoint_path: Union[str, Path]) -> Tuple[PinNetwork, dict]:
        checkpoint = load_checkpoint(checkpoint_path)
        return PinNetwork.from_checkpoint(checkpoint), dict(checkpoint.manifest)

    def predict(
        self,
        network: PinNetwork,
        manifest: dict,
        volume: Volume,
        config: InferenceConfig,
        shape_model: Optional[ShapeModel] = None,
    ) -> Tuple[LandmarkSet, InferenceResult]:
        """Run the mode recorded in the checkpoint manifest."""
        side = network.config.input_side
        if manifest.get("mode", "single") == "multi":
            if shape_model is None:
                raise ConfigError("A multi-landmark checkpoint needs a shape model")
            n_b = int(manifest.get("n_b", network.n_o))
            if n_b != shape_model.n_modes:
                raise InferenceError(
                    f"Checkpoint n_b={n_b} does not match shape model n_b={shape_model.n_modes}"
                )
            result = infer_multi(network, shape_model, volume, side, config, self.metrics)
            landmarks = LandmarkSet.from_flat(result.prediction)
        else:
            result = infer_single(network, volume, side, config, self.metrics)
            landmarks = LandmarkSet.create([result.prediction])
        logger.info(
            f"Inference finished with rule {config.rule} "
            f"({max(result.iterations)} iterations)"
        )
        return landmarks, result
