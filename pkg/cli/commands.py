"""CLI command handlers. Each returns an exit code: 0 success, 2 runtime error."""

import sys
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from config.settings import RunConfig
from core.errors import ConfigError, MissingArtifactError, PinError
from core.factory import ServiceFactory
from lib_logging.logger import get_logger
from models.network import TrainingMode
from services.inference_service import write_trajectory
from services.phantom_service import generate_dataset
from services.training_service import checkpoint_summary
from storage.landmark_storage import write_landmarks
from storage.shape_storage import load_shape_model
from storage.volume_storage import read_volume
from validation.config_validator import validate_phantom_config

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 2


def _error(message: str) -> int:
    print(f"ERROR: {message}", file=sys.stderr)
    return EXIT_RUNTIME


def _guarded(action: Callable[[], int]) -> int:
    """Map pipeline and I/O errors to exit code 2."""
    try:
        return action()
    except PinError as e:
        logger.error(f"Command failed: {e}")
        return _error(str(e))
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        return _error(str(e))


def _load_config(config_path: Optional[str]) -> RunConfig:
    return RunConfig.from_file(config_path) if config_path else RunConfig()


def _resolve_factory(factory: Optional[ServiceFactory]) -> ServiceFactory:
    return factory if factory is not None else ServiceFactory()


def handle_gen_data(config_path: Optional[str], out_dir: str, count: int) -> int:
    """Handle gen-data: write ``count`` phantoms plus ``manifest.csv`` into ``out_dir``."""

    def action() -> int:
        config = _load_config(config_path)
        phantom = config.phantom_config()
        is_valid, error_msg = validate_phantom_config(phantom)
        if not is_valid:
            raise ConfigError(error_msg)
        entries = generate_dataset(phantom, count, out_dir, threads=config.threads)
        config.echo(out_dir, "gen_data")
        print(f"SUCCESS: Generated {len(entries)} phantoms in {out_dir}")
        return EXIT_OK

    return _guarded(action)


def handle_fit_pca(
    manifest: str,
    threshold: Optional[float],
    out: str,
    config_path: Optional[str] = None,
    factory: Optional[ServiceFactory] = None,
) -> int:
    """Handle fit-pca: fit the shape model on the training split.

    ``threshold`` overrides the config key ``variance_threshold``.
    """

    def action() -> int:
        config = _load_config(config_path).with_overrides({"variance_threshold": threshold})
        service = _resolve_factory(factory).create_shape_service(manifest)
        model = service.fit_and_save(out, config.get_float("variance_threshold"))
        config.echo(Path(out).parent, "fit_pca")
        print(f"SUCCESS: Shape model with n_b={model.n_modes} written to {out}")
        return EXIT_OK

    return _guarded(action)


def handle_train(
    mode: str,
    landmark: int,
    config_path: Optional[str],
    manifest: str,
    out_dir: str,
    shape_model_path: Optional[str] = None,
    factory: Optional[ServiceFactory] = None,
) -> int:
    """Handle train: one landmark (single) or all landmarks jointly (multi)."""

    def action() -> int:
        config = _load_config(config_path)
        training_mode = TrainingMode(mode)
        shape_model = None
        if training_mode is TrainingMode.MULTI:
            if not shape_model_path:
                raise ConfigError("train --mode multi needs --shape-model")
            shape_model = load_shape_model(shape_model_path)
            network_config = config.network_config(
                input_channels=3 * shape_model.n_landmarks, n_o=shape_model.n_modes
            )
        else:
            network_config = config.network_config(input_channels=3, n_o=3)
        service = _resolve_factory(factory).create_training_service(manifest)
        config.echo(out_dir, "train")
        result = service.train(
            network_config,
            config.train_config(),
            out_dir,
            mode=training_mode,
            landmark_index=landmark,
            shape_model=shape_model,
        )
        print(f"SUCCESS: Trained {training_mode} model; checkpoint {result.checkpoint_path}")
        return EXIT_OK

    return _guarded(action)


def handle_infer(
    checkpoint: str,
    volume_path: str,
    out: str,
    rule: Optional[str] = None,
    shape_model_path: Optional[str] = None,
    config_path: Optional[str] = None,
    trajectory: Optional[str] = None,
    factory: Optional[ServiceFactory] = None,
) -> int:
    """Handle infer: predict landmarks on one volume and write them as CSV."""

    def action() -> int:
        if not Path(checkpoint).exists():
            raise MissingArtifactError(checkpoint, "checkpoint")
        config = _load_config(config_path)
        if rule:
            config = config.with_overrides({"rule": rule.upper()})
        service = _resolve_factory(factory).create_inference_service()
        network, manifest = service.load_network(checkpoint)
        shape_model = load_shape_model(shape_model_path) if shape_model_path else None
        volume = read_volume(volume_path)
        landmarks, result = service.predict(
            network,
            manifest,
            volume,
            config.inference_config(record_trajectory=trajectory is not None),
            shape_model,
        )
        write_landmarks(landmarks, out)
        if trajectory:
            write_trajectory(result.trajectory, result.finals.shape[1], trajectory)
        config.echo(Path(out).parent, "infer")
        print(f"SUCCESS: {checkpoint_summary(manifest)} -> {out}")
        return EXIT_OK

    return _guarded(action)


def _parse_alpha_checkpoints(specs: Sequence[str]) -> dict:
    checkpoints = {}
    for spec in specs:
        alpha, sep, path = spec.partition("=")
        if not sep:
            raise ConfigError(f"--checkpoint expects ALPHA=PATH, got {spec!r}")
        try:
            checkpoints[float(alpha)] = path
        except ValueError:
            raise ConfigError(f"--checkpoint alpha must be a number, got {alpha!r}")
    return checkpoints


def handle_eval_ablation(
    manifest: str,
    checkpoint_specs: List[str],
    out_dir: str,
    config_path: Optional[str] = None,
    landmark: Optional[int] = None,
    factory: Optional[ServiceFactory] = None,
) -> int:
    """Handle eval-ablation: the five loss/rule variants on the test split."""

    def action() -> int:
        config = _load_config(config_path)
        service = _resolve_factory(factory).create_evaluation_service(
            manifest, runtime_repeats=config.get_int("runtime_repeats")
        )
        results = service.run_ablation(
            _parse_alpha_checkpoints(checkpoint_specs),
            config.inference_config(),
            out_dir,
            landmark_index=landmark,
        )
        config.echo(out_dir, "eval_ablation")
        print(f"SUCCESS: Evaluated {len(results)} variants; tables in {out_dir}")
        return EXIT_OK

    return _guarded(action)


def handle_eval_multi(
    manifest: str,
    single_checkpoints: List[str],
    multi_checkpoint: str,
    shape_model_path: str,
    out_dir: str,
    config_path: Optional[str] = None,
    factory: Optional[ServiceFactory] = None,
) -> int:
    """Handle eval-multi: per-landmark single models versus the joint model."""

    def action() -> int:
        config = _load_config(config_path)
        service = _resolve_factory(factory).create_evaluation_service(
            manifest, runtime_repeats=config.get_int("runtime_repeats")
        )
        single, multi = service.run_single_vs_multi(
            single_checkpoints,
            multi_checkpoint,
            load_shape_model(shape_model_path),
            config.inference_config(),
            out_dir,
        )
        config.echo(out_dir, "eval_multi")
        print(
            f"SUCCESS: single {single.overall_mean:.3f} mm, multi {multi.overall_mean:.3f} mm; "
            f"tables in {out_dir}"
        )
        return EXIT_OK

    return _guarded(action)
