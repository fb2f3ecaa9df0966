"""Mini-batch Adam training of the PIN network."""

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from core.errors import ConfigError, NonFiniteError, TrainingDivergedError
from lib_logging.logger import get_logger
from lib_logging.metrics import RunMetrics
from micrograd.layers import Mode
from micrograd.optim import Adam
from models.dataset import Split
from models.network import NetworkConfig, TrainConfig, TrainingMode, TrainingSample
from models.shape import ShapeModel
from models.volume import LandmarkSet, Volume
from network.labels import gt_labels
from network.loss import LossTerms, joint_loss
from network.pin_network import PinNetwork
from network.samples import make_sample_multi, make_sample_single
from storage.atomic import atomic_write_text
from storage.checkpoint_storage import save_checkpoint
from storage.interfaces import DatasetRepository
from validation.config_validator import validate_network_config, validate_train_config

logger = get_logger(__name__)

LOSS_HEADER = ["iteration", "total", "regression", "classification"]
FINAL_CHECKPOINT = "model.pinc"


@dataclass
class TrainingResult:
    """Where the final checkpoint went and the logged loss rows."""

    checkpoint_path: Path
    iterations: int
    loss_rows: List[Tuple[int, float, float, float]] = field(default_factory=list)


class TrainingService:
    """Trains single- or multi-landmark models on the training split.

    Depends on a dataset repository (injected as ``DatasetRepository``).
    """

    def __init__(self, storage: DatasetRepository, metrics: Optional[RunMetrics] = None):
        self.storage: DatasetRepository = storage
        self.metrics = metrics or RunMetrics()

    def _cases(self) -> List[Tuple[Volume, LandmarkSet]]:
        entries = self.storage.entries(Split.TRAIN)
        if not entries:
            raise ConfigError("Training needs at least one training volume")
        return [self.storage.load_case(e) for e in entries]

    @staticmethod
    def _validate(network_config: NetworkConfig, train_config: TrainConfig) -> None:
        for is_valid, error_msg in (
            validate_network_config(network_config),
            validate_train_config(train_config),
        ):
            if not is_valid:
                logger.warning(f"Training config rejected: {error_msg}")
                raise ConfigError(error_msg)

    def _make_sample(
        self,
        case: Tuple[Volume, LandmarkSet],
        seed: int,
        mode: TrainingMode,
        landmark_index: int,
        side: int,
        shape_model: Optional[ShapeModel],
        multiplier: float,
    ) -> TrainingSample:
        volume, landmarks = case
        rng = np.random.default_rng(seed)
        if mode is TrainingMode.MULTI:
            assert shape_model is not None
            return make_sample_multi(volume, landmarks, shape_model, side, rng, multiplier)
        return make_sample_single(volume, landmarks.point(landmark_index), side, rng)

    def train(
        self,
        network_config: NetworkConfig,
        train_config: TrainConfig,
        out_dir: Union[str, Path],
        mode: TrainingMode = TrainingMode.SINGLE,
        landmark_index: int = 0,
        shape_model: Optional[ShapeModel] = None,
    ) -> TrainingResult:
        """
        Minimise the joint loss with Adam and write checkpoints and ``loss.csv``.

        Sample synthesis runs on ``train_config.threads`` workers; every sample
        gets its own seed drawn in order from the sampling stream, so results do
        not depend on the worker count.

        Raises:
            ConfigError: invalid settings or an empty training split
            TrainingDivergedError: non-finite loss or gradient
        """
        self._validate(network_config, train_config)
        cases = self._cases()
        if mode is TrainingMode.MULTI:
            if shape_model is None:
                raise ConfigError("Multi-landmark training needs a shape model")
            if network_config.n_o != shape_model.n_modes:
                raise ConfigError(
                    f"n_o={network_config.n_o} must equal shape model n_b={shape_model.n_modes}"
                )
        elif not 0 <= landmark_index < cases[0][1].n_landmarks:
            raise ConfigError(f"Landmark index {landmark_index} out of range")

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        init_seq, sample_seq, dropout_seq = np.random.SeedSequence(train_config.seed).spawn(3)
        network = PinNetwork.initialise(
            network_config, train_config.weight_init_sigma, np.random.default_rng(init_seq)
        )
        sample_rng = np.random.default_rng(sample_seq)
        dropout_rng = np.random.default_rng(dropout_seq)
        optimiser = Adam(
            network.params,
            learning_rate=train_config.learning_rate,
            beta1=train_config.beta1,
            beta2=train_config.beta2,
            epsilon=train_config.adam_epsilon,
        )
        manifest = {
            "mode": mode.value,
            "landmark_index": landmark_index if mode is TrainingMode.SINGLE else -1,
            "n_b": shape_model.n_modes if shape_model is not None else 0,
            **{k: repr(v) if isinstance(v, float) else v for k, v in train_config.to_dict().items()},
        }

        loss_rows: List[Tuple[int, float, float, float]] = []
        last_checkpoint: Optional[Path] = None
        side = network_config.input_side
        logger.info(
            f"Training {mode} model for {train_config.iterations} iterations on {len(cases)} volumes",
            extra={"extra_data": {**network_config.to_dict(), **train_config.to_dict()}},
        )

        with ThreadPoolExecutor(max_workers=max(1, train_config.threads)) as pool:
            for iteration in range(1, train_config.iterations + 1):
                picks = sample_rng.integers(0, len(cases), size=train_config.batch_size)
                seeds = sample_rng.integers(0, 2**63 - 1, size=train_config.batch_size)
                samples = list(
                    pool.map(
                        lambda job: self._make_sample(
                            cases[job[0]],
                            int(job[1]),
                            mode,
                            landmark_index,
                            side,
                            shape_model,
                            train_config.b_sample_sigma_multiplier,
                        ),
                        zip(picks, seeds),
                    )
                )
                try:
                    terms = self._step(network, optimiser, samples, train_config.alpha, dropout_rng)
                except NonFiniteError as e:
                    logger.error(f"Training diverged at iteration {iteration}: {e}")
                    raise TrainingDivergedError(iteration, last_checkpoint) from e

                self.metrics.training_iterations.inc()
                self.metrics.patches_extracted.inc(len(samples))
                if iteration % train_config.log_interval == 0 or iteration == train_config.iterations:
                    loss_rows.append(
                        (iteration, terms.total, terms.regression, terms.classification)
                    )
                    self._record_loss(terms)
                    self._write_loss_log(loss_rows, out / "loss.csv")
                    logger.debug(f"Iteration {iteration}: loss {terms.total:.6f}")
                if iteration % train_config.checkpoint_interval == 0:
                    last_checkpoint = out / f"checkpoint_{iteration:06d}.pinc"
                    save_checkpoint(
                        network.to_checkpoint({**manifest, "iteration": iteration}),
                        last_checkpoint,
                    )

        final_path = out / FINAL_CHECKPOINT
        save_checkpoint(
            network.to_checkpoint({**manifest, "iteration": train_config.iterations}), final_path
        )
        self.metrics.write(out / "metrics.prom")
        logger.info(f"Training finished; final checkpoint {final_path}")
        return TrainingResult(final_path, train_config.iterations, loss_rows)

    @staticmethod
    def _step(
        network: PinNetwork,
        optimiser: Adam,
        samples: List[TrainingSample],
        alpha: float,
        dropout_rng: np.random.Generator,
    ) -> LossTerms:
        patches = np.stack([s.patch.data for s in samples])
        d_gt = np.stack([s.d_gt for s in samples])
        classes = gt_labels(d_gt)
        optimiser.zero_grad()
        d, P = network.forward_graph(patches, Mode.TRAIN, dropout_rng)
        loss, terms = joint_loss(d, P, d_gt, classes, alpha)
        if not np.isfinite(terms.total):
            raise NonFiniteError("training loss")
        loss.backward()
        optimiser.step()
        return terms

    def _record_loss(self, terms: LossTerms) -> None:
        self.metrics.loss.labels(term="total").set(terms.total)
        self.metrics.loss.labels(term="regression").set(terms.regression)
        self.metrics.loss.labels(term="classification").set(terms.classification)

    @staticmethod
    def _write_loss_log(rows: List[Tuple[int, float, float, float]], path: Path) -> None:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(LOSS_HEADER)
        for iteration, *values in rows:
            writer.writerow([iteration, *(repr(float(v)) for v in values)])
        atomic_write_text(path, buffer.getvalue())


def checkpoint_summary(manifest: Dict[str, str]) -> str:
    """One-line description of a checkpoint manifest for logs and reports."""
    mode = manifest.get("mode", "single")
    which = f"landmark {manifest.get('landmark_index')}" if mode == "single" else f"n_b {manifest.get('n_b')}"
    return f"{mode} ({which}), alpha={manifest.get('alpha')}, iteration {manifest.get('iteration')}"
