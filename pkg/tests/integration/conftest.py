"""
Integration fixtures: a desk-scale phantom dataset on disk and small trained models.

Everything here is session-scoped; the datasets and checkpoints are built once
and shared by the tests in tests/integration/.
"""

from dataclasses import replace

import pytest

from lib_logging.logger import get_logger
from micrograd.tensor import Precision
from models.network import NetworkConfig, TrainConfig, TrainingMode
from models.phantom import PhantomConfig
from services.phantom_service import generate_dataset
from services.shape_service import ShapeService
from services.training_service import TrainingService
from storage.dataset_storage import ManifestDatasetStorage

logger = get_logger(__name__)

DESK_PHANTOM = PhantomConfig(
    dims=(48, 48, 48),
    translation_range=3.0,
    rotation_range_deg=10.0,
    noise_sigma=0.02,
    seed=11,
)

DESK_NETWORK = NetworkConfig(
    input_side=9,
    input_channels=3,
    conv_channels=(2, 3),
    fc_widths=(4,),
    n_o=3,
    dropout_rate=0.0,
    precision=Precision.FLOAT64,
)

DESK_TRAIN = TrainConfig(
    batch_size=4,
    iterations=6,
    learning_rate=0.01,
    checkpoint_interval=1000,
    log_interval=2,
    seed=5,
)


@pytest.fixture(scope="session")
def desk_manifest(tmp_path_factory):
    """Ten 48^3 phantoms (7 train, 3 test) written to disk."""
    out = tmp_path_factory.mktemp("desk_data")
    generate_dataset(DESK_PHANTOM, 10, out, threads=2)
    logger.info(f"Desk dataset ready in {out}")
    return out / "manifest.csv"


@pytest.fixture(scope="session")
def twenty_phantom_storage(tmp_path_factory):
    """Twenty 48^3 phantoms for the short full-size-patch training run."""
    out = tmp_path_factory.mktemp("twenty_phantoms")
    generate_dataset(replace(DESK_PHANTOM, seed=12), 20, out, threads=2)
    return ManifestDatasetStorage(out / "manifest.csv")


@pytest.fixture(scope="session")
def desk_storage(desk_manifest):
    return ManifestDatasetStorage(desk_manifest)


@pytest.fixture(scope="session")
def desk_shape_model(desk_storage):
    return ShapeService(desk_storage).fit(0.995)


@pytest.fixture(scope="session")
def ablation_checkpoints(desk_storage, tmp_path_factory):
    """Landmark-0 checkpoints trained at alpha 0, 0.5 and 1."""
    root = tmp_path_factory.mktemp("ablation_models")
    checkpoints = {}
    for alpha in (0.0, 0.5, 1.0):
        result = TrainingService(desk_storage).train(
            DESK_NETWORK, replace(DESK_TRAIN, alpha=alpha), root / f"alpha{alpha}"
        )
        checkpoints[alpha] = result.checkpoint_path
    return checkpoints


@pytest.fixture(scope="session")
def single_and_multi_checkpoints(desk_storage, desk_shape_model, tmp_path_factory):
    """One single-landmark checkpoint per landmark plus one joint checkpoint."""
    root = tmp_path_factory.mktemp("comparison_models")
    singles = [
        TrainingService(desk_storage)
        .train(DESK_NETWORK, DESK_TRAIN, root / f"landmark{index}", landmark_index=index)
        .checkpoint_path
        for index in range(desk_shape_model.n_landmarks)
    ]
    multi_network = replace(
        DESK_NETWORK,
        input_channels=3 * desk_shape_model.n_landmarks,
        n_o=desk_shape_model.n_modes,
    )
    multi = (
        TrainingService(desk_storage)
        .train(
            multi_network,
            DESK_TRAIN,
            root / "multi",
            mode=TrainingMode.MULTI,
            shape_model=desk_shape_model,
        )
        .checkpoint_path
    )
    return singles, multi


@pytest.fixture
def desk_network_config():
    return DESK_NETWORK


@pytest.fixture
def desk_train_config():
    return DESK_TRAIN
