"""Localisation error, the five-variant ablation and single-vs-joint comparison."""

import csv
import hashlib
import io
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import ConfigError, MissingArtifactError
from lib_logging.logger import get_logger
from lib_logging.metrics import RunMetrics
from models.dataset import ManifestEntry, Split
from models.evaluation import EvalResult, VariantSpec
from models.inference import InferenceConfig, UpdateRule
from models.shape import ShapeModel
from models.volume import Volume, voxel_to_mm
from network.pin_network import PinNetwork
from services.inference_service import InferenceResult, infer_multi, infer_single
from storage.atomic import atomic_write_text
from storage.checkpoint_storage import load_checkpoint
from storage.interfaces import DatasetRepository

logger = get_logger(__name__)

ABLATION_VARIANTS = (
    VariantSpec("PIN1", 1.0, "A", "C"),
    VariantSpec("PIN2", 0.0, "B", "R"),
    VariantSpec("PIN3", 0.5, "A", "C+R"),
    VariantSpec("PIN4", 0.5, "B", "C+R"),
    VariantSpec("PIN5", 0.5, "C", "C+R"),
)


def localisation_error(pred, gt, spacing) -> float:
    """Euclidean distance in mm between two voxel-coordinate points."""
    return float(np.linalg.norm(voxel_to_mm(pred, spacing) - voxel_to_mm(gt, spacing)))


def file_sha256(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def timed_median(run: Callable[[], InferenceResult], repeats: int) -> Tuple[InferenceResult, float]:
    """First result plus the median wall time over ``repeats`` runs."""
    times = []
    first: Optional[InferenceResult] = None
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        result = run()
        times.append(time.perf_counter() - start)
        if first is None:
            first = result
    assert first is not None
    return first, float(np.median(times))


def _format(mean: float, sd: float) -> str:
    return f"{mean:.2f} ± {sd:.2f}"


class EvaluationService:
    """Evaluates trained checkpoints on the test split of a dataset repository."""

    def __init__(
        self,
        storage: DatasetRepository,
        metrics: Optional[RunMetrics] = None,
        runtime_repeats: int = 3,
    ):
        self.storage: DatasetRepository = storage
        self.metrics = metrics or RunMetrics()
        self.runtime_repeats = runtime_repeats

    def _test_cases(self) -> List[ManifestEntry]:
        entries = self.storage.entries(Split.TEST)
        if not entries:
            raise ConfigError("Evaluation needs at least one test volume")
        return entries

    @staticmethod
    def _load(path: Union[str, Path], what: str) -> Tuple[PinNetwork, Dict[str, str]]:
        if not Path(path).exists():
            raise MissingArtifactError(path, what)
        checkpoint = load_checkpoint(path)
        return PinNetwork.from_checkpoint(checkpoint), dict(checkpoint.manifest)

    def evaluate_single(
        self,
        network: PinNetwork,
        landmark_index: int,
        config: InferenceConfig,
        name: str,
    ) -> EvalResult:
        """Per-volume error of one landmark model; ``errors`` is ``[n_volumes, 1]``."""
        errors, initial, runtimes = [], [], []
        side = network.config.input_side
        for entry in self._test_cases():
            volume, landmarks = self.storage.load_case(entry)
            result, seconds = timed_median(
                lambda: infer_single(network, volume, side, config), self.runtime_repeats
            )
            gt = landmarks.point(landmark_index)
            errors.append([localisation_error(result.prediction, gt, volume.spacing)])
            initial.append([localisation_error(result.initial, gt, volume.spacing)])
            runtimes.append(seconds)
            self.metrics.inference_seconds.observe(seconds)
        return EvalResult(name, np.array(errors), runtimes, np.array(initial))

    def run_ablation(
        self,
        checkpoints: Mapping[float, Union[str, Path]],
        base_config: InferenceConfig,
        out_dir: Union[str, Path],
        landmark_index: Optional[int] = None,
    ) -> List[EvalResult]:
        """Evaluate PIN1..PIN5 and write ``ablation.csv`` / ``ablation.md``.

        ``checkpoints`` maps a training alpha to its checkpoint file.

        Raises:
            MissingArtifactError: a variant's checkpoint is absent (names the variant)
        """
        missing = [
            v.name
            for v in ABLATION_VARIANTS
            if v.alpha not in checkpoints or not Path(checkpoints[v.alpha]).exists()
        ]
        if missing:
            first = next(v for v in ABLATION_VARIANTS if v.name == missing[0])
            raise MissingArtifactError(
                checkpoints.get(first.alpha, f"<alpha={first.alpha}>"),
                f"checkpoint for variant(s) {', '.join(missing)}",
            )

        networks = {alpha: self._load(path, "checkpoint") for alpha, path in checkpoints.items()}
        results = []
        for variant in ABLATION_VARIANTS:
            network, manifest = networks[variant.alpha]
            index = landmark_index if landmark_index is not None else int(
                manifest.get("landmark_index", 0)
            )
            config = replace(base_config, rule=UpdateRule(variant.rule), iterations=None)
            result = self.evaluate_single(network, index, config, variant.name)
            result.fingerprint = {
                "alpha": repr(variant.alpha),
                "rule": variant.rule,
                "T": str(config.T),
                "seed": str(config.seed),
                "landmark_index": str(index),
                "checkpoint_sha256": file_sha256(checkpoints[variant.alpha]),
            }
            logger.info(
                f"{variant.name}: {_format(result.overall_mean, result.overall_sd)} mm, "
                f"{result.mean_runtime:.3f} s/volume"
            )
            results.append(result)

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out / "ablation.csv", ablation_csv(results))
        atomic_write_text(out / "ablation.md", ablation_markdown(results))
        self.metrics.write(out / "metrics.prom")
        return results

    def run_single_vs_multi(
        self,
        single_checkpoints: Sequence[Union[str, Path]],
        multi_checkpoint: Union[str, Path],
        shape_model: ShapeModel,
        base_config: InferenceConfig,
        out_dir: Union[str, Path],
    ) -> Tuple[EvalResult, EvalResult]:
        """Per-landmark errors of the single models versus the joint model.

        Single-mode runtime is the summed per-landmark inference time per volume;
        joint runtime is one inference covering all landmarks.

        Raises:
            ConfigError: landmark-count mismatch between checkpoints, model and data
        """
        n_l = shape_model.n_landmarks
        if len(single_checkpoints) != n_l:
            raise ConfigError(
                f"Got {len(single_checkpoints)} single-landmark checkpoints for {n_l} landmarks"
            )
        singles = [self._load(path, "single-landmark checkpoint") for path in single_checkpoints]
        by_landmark: Dict[int, PinNetwork] = {}
        for (network, manifest), path in zip(singles, single_checkpoints):
            index = int(manifest.get("landmark_index", -1))
            if not 0 <= index < n_l or index in by_landmark:
                raise ConfigError(f"{path}: unexpected landmark_index {index}")
            by_landmark[index] = network
        multi_network, _ = self._load(multi_checkpoint, "multi-landmark checkpoint")

        single_config = replace(base_config, rule=UpdateRule.C)
        multi_config = replace(base_config, rule=UpdateRule.C)
        single_err, multi_err = [], []
        single_init, multi_init = [], []
        single_time, multi_time = [], []
        for entry in self._test_cases():
            volume, landmarks = self.storage.load_case(entry)
            if landmarks.n_landmarks != n_l:
                raise ConfigError(
                    f"Case {entry.index} has {landmarks.n_landmarks} landmarks, model has {n_l}"
                )
            row, row_init, seconds = [], [], 0.0
            for index in range(n_l):
                network = by_landmark[index]
                result, elapsed = timed_median(
                    lambda: infer_single(
                        network, volume, network.config.input_side, single_config
                    ),
                    self.runtime_repeats,
                )
                seconds += elapsed
                row.append(localisation_error(result.prediction, landmarks.point(index), volume.spacing))
                row_init.append(localisation_error(result.initial, landmarks.point(index), volume.spacing))
            single_err.append(row)
            single_init.append(row_init)
            single_time.append(seconds)

            result, elapsed = timed_median(
                lambda: infer_multi(
                    multi_network,
                    shape_model,
                    volume,
                    multi_network.config.input_side,
                    multi_config,
                ),
                self.runtime_repeats,
            )
            multi_time.append(elapsed)
            self.metrics.inference_seconds.observe(elapsed)
            multi_err.append(_per_landmark_errors(result.prediction, landmarks.points, volume))
            multi_init.append(_per_landmark_errors(result.initial, landmarks.points, volume))

        fingerprint = {
            "rule": "C",
            "T": str(multi_config.T),
            "seed": str(multi_config.seed),
            "multi_checkpoint_sha256": file_sha256(multi_checkpoint),
            "single_checkpoints_sha256": ",".join(file_sha256(p) for p in single_checkpoints),
        }
        single = EvalResult("PIN-Single", np.array(single_err), single_time, np.array(single_init), dict(fingerprint))
        multi = EvalResult("PIN-Multiple", np.array(multi_err), multi_time, np.array(multi_init), dict(fingerprint))
        logger.info(
            f"Single {_format(single.overall_mean, single.overall_sd)} mm "
            f"({single.mean_runtime:.3f} s); multi {_format(multi.overall_mean, multi.overall_sd)} mm "
            f"({multi.mean_runtime:.3f} s)"
        )

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out / "single_vs_multi.csv", comparison_csv([single, multi]))
        atomic_write_text(out / "single_vs_multi.md", comparison_markdown([single, multi]))
        self.metrics.write(out / "metrics.prom")
        return single, multi


def _per_landmark_errors(flat_pred: np.ndarray, gt_points: np.ndarray, volume: Volume) -> List[float]:
    pred = np.asarray(flat_pred).reshape(-1, 3)
    return [localisation_error(p, g, volume.spacing) for p, g in zip(pred, gt_points)]


def ablation_csv(results: Sequence[EvalResult]) -> str:
    variants = {v.name: v for v in ABLATION_VARIANTS}
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["variant", "loss", "rule", "alpha", "T", "mean_mm", "sd_mm",
         "initial_mean_mm", "improved_fraction", "runtime_s"]
    )
    for r in results:
        v = variants[r.name]
        writer.writerow(
            [r.name, v.loss_label, v.rule, repr(v.alpha), r.fingerprint.get("T", ""),
             repr(r.overall_mean), repr(r.overall_sd),
             repr(float(r.initial_errors.mean())), repr(r.improved_fraction()),
             repr(r.mean_runtime)]
        )
    return buffer.getvalue()


def ablation_markdown(results: Sequence[EvalResult]) -> str:
    variants = {v.name: v for v in ABLATION_VARIANTS}
    names = [r.name for r in results]
    lines = [
        "| | " + " | ".join(names) + " |",
        "|---|" + "---|" * len(names),
        "| Training loss | " + " | ".join(variants[n].loss_label for n in names) + " |",
        "| Inference rule | " + " | ".join(f"Rule {variants[n].rule}" for n in names) + " |",
        "| Localisation error (mm) | "
        + " | ".join(_format(r.overall_mean, r.overall_sd) for r in results)
        + " |",
        "| Runtime (s) | " + " | ".join(f"{r.mean_runtime:.3f}" for r in results) + " |",
    ]
    return "\n".join(lines) + "\n\n" + _fingerprint_block(results)


def comparison_csv(results: Sequence[EvalResult]) -> str:
    n_l = results[0].n_landmarks
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["method"]
        + [f"L{i + 1}_mean_mm" for i in range(n_l)]
        + [f"L{i + 1}_sd_mm" for i in range(n_l)]
        + ["overall_mean_mm", "overall_sd_mm", "runtime_s"]
    )
    for r in results:
        writer.writerow(
            [r.name]
            + [repr(float(v)) for v in r.per_landmark_mean]
            + [repr(float(v)) for v in r.per_landmark_sd]
            + [repr(r.overall_mean), repr(r.overall_sd), repr(r.mean_runtime)]
        )
    return buffer.getvalue()


def comparison_markdown(results: Sequence[EvalResult]) -> str:
    n_l = results[0].n_landmarks
    header = ["Landmarks"] + [f"L{i + 1}" for i in range(n_l)] + ["Overall", "Runtime (s)"]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for r in results:
        cells = [r.name]
        cells += [_format(m, s) for m, s in zip(r.per_landmark_mean, r.per_landmark_sd)]
        cells += [_format(r.overall_mean, r.overall_sd), f"{r.mean_runtime:.3f}"]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n\n" + _fingerprint_block(results)


def _fingerprint_block(results: Sequence[EvalResult]) -> str:
    lines = ["Configuration fingerprints:", ""]
    for r in results:
        items = ", ".join(f"{k}={v}" for k, v in sorted(r.fingerprint.items()))
        lines.append(f"- {r.name}: {items}")
    return "\n".join(lines) + "\n"
