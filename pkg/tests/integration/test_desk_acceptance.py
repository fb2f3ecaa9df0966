"""
The full desk experiment from scripts/desk.cfg: 150 phantoms at 64^3, one
landmark-0 model evaluated with Rules A and C, then every per-landmark model
against the joint shape-space model.

Marked slow; run with ``./scripts/test.sh slow`` or ``pytest -m slow``.
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from config.settings import RunConfig
from models.dataset import Split
from models.inference import UpdateRule
from models.network import TrainingMode
from network.pin_network import PinNetwork
from services.evaluation_service import EvaluationService
from services.inference_service import infer_multi
from services.phantom_service import generate_dataset
from services.shape_service import ShapeService
from services.training_service import TrainingService
from storage.checkpoint_storage import load_checkpoint
from storage.dataset_storage import ManifestDatasetStorage

DESK_CONFIG = Path(__file__).resolve().parents[2] / "scripts" / "desk.cfg"
N_PHANTOMS = 150

pytestmark = [pytest.mark.slow, pytest.mark.integration]


@pytest.fixture(scope="module")
def desk_config():
    return RunConfig.from_file(DESK_CONFIG)


@pytest.fixture(scope="module")
def experiment_storage(desk_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("desk_experiment")
    generate_dataset(desk_config.phantom_config(), N_PHANTOMS, out, threads=desk_config.threads)
    return ManifestDatasetStorage(out / "manifest.csv")


@pytest.fixture(scope="module")
def experiment_shape_model(desk_config, experiment_storage):
    return ShapeService(experiment_storage).fit(desk_config.get_float("variance_threshold"))


@pytest.fixture(scope="module")
def single_checkpoints(desk_config, experiment_storage, tmp_path_factory):
    """One trained checkpoint per landmark; index 0 is the alpha 0.5 model."""
    root = tmp_path_factory.mktemp("desk_singles")
    n_landmarks = desk_config.get_int("n_landmarks")
    return [
        TrainingService(experiment_storage)
        .train(
            desk_config.network_config(),
            desk_config.train_config(),
            root / f"landmark{index}",
            landmark_index=index,
        )
        .checkpoint_path
        for index in range(n_landmarks)
    ]


@pytest.fixture(scope="module")
def multi_checkpoint(desk_config, experiment_storage, experiment_shape_model, tmp_path_factory):
    network_config = desk_config.network_config(
        input_channels=3 * experiment_shape_model.n_landmarks,
        n_o=experiment_shape_model.n_modes,
    )
    return (
        TrainingService(experiment_storage)
        .train(
            network_config,
            desk_config.train_config(),
            tmp_path_factory.mktemp("desk_multi"),
            mode=TrainingMode.MULTI,
            shape_model=experiment_shape_model,
        )
        .checkpoint_path
    )


class TestSingleLandmark:
    """Landmark-0 model at alpha 0.5, 5000 Adam iterations."""

    def test_rule_c_within_three_voxels_and_beats_rule_a(
        self, desk_config, experiment_storage, single_checkpoints
    ):
        network = PinNetwork.from_checkpoint(load_checkpoint(single_checkpoints[0]))
        service = EvaluationService(experiment_storage, runtime_repeats=1)
        base = desk_config.inference_config()
        rule_c = service.evaluate_single(network, 0, replace(base, rule=UpdateRule.C), "C")
        rule_a = service.evaluate_single(network, 0, replace(base, rule=UpdateRule.A), "A")

        spacing = desk_config.get_float("spacing")
        assert rule_c.overall_mean / spacing <= 3.0
        assert rule_c.overall_mean <= rule_a.overall_mean
        assert rule_c.improved_fraction() >= 0.9
        assert rule_c.mean_runtime < 1.0


class TestMultiLandmark:
    """Joint shape-space model against the ten per-landmark models."""

    def test_joint_error_and_runtime(
        self,
        desk_config,
        experiment_storage,
        experiment_shape_model,
        single_checkpoints,
        multi_checkpoint,
        tmp_path,
    ):
        service = EvaluationService(experiment_storage, runtime_repeats=1)
        single, multi = service.run_single_vs_multi(
            single_checkpoints,
            multi_checkpoint,
            experiment_shape_model,
            desk_config.inference_config(),
            tmp_path,
        )
        assert multi.overall_mean <= 1.5 * single.overall_mean
        assert multi.mean_runtime < single.mean_runtime

    def test_predictions_stay_in_the_shape_subspace(
        self, desk_config, experiment_storage, experiment_shape_model, multi_checkpoint
    ):
        network = PinNetwork.from_checkpoint(load_checkpoint(multi_checkpoint))
        model = experiment_shape_model
        config = desk_config.inference_config()
        for entry in experiment_storage.entries(Split.TEST)[:5]:
            volume, _ = experiment_storage.load_case(entry)
            result = infer_multi(network, model, volume, network.config.input_side, config)
            centred = result.prediction - model.mean
            projected = model.eigenvectors @ (model.eigenvectors.T @ centred)
            np.testing.assert_allclose(projected, centred, atol=1e-6)
