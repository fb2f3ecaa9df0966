"""Pytest configuration and fixtures."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from lib_logging.logger import get_logger  # noqa: E402
from micrograd.tensor import Precision  # noqa: E402
from models.dataset import Split  # noqa: E402
from models.network import NetworkConfig  # noqa: E402
from models.phantom import PhantomConfig  # noqa: E402
from services.phantom_service import (  # noqa: E402
    canonical_offsets,
    generate_phantom,
    sample_pose,
)
from services.shape_service import fit_shape_model  # noqa: E402
from storage.fake.dataset_storage import FakeDatasetStorage  # noqa: E402

logger = get_logger(__name__)


@pytest.fixture
def rng():
    """Seeded generator so every test draws the same numbers."""
    return np.random.default_rng(1234)


@pytest.fixture
def small_phantom_config():
    """48^3 phantoms with a modest pose range; valid under the border margin."""
    return PhantomConfig(
        dims=(48, 48, 48),
        translation_range=3.0,
        rotation_range_deg=10.0,
        noise_sigma=0.02,
        seed=7,
    )


@pytest.fixture
def phantom_case(small_phantom_config):
    """One generated (volume, landmarks) pair."""
    return generate_phantom(small_phantom_config, 0)


@pytest.fixture
def tiny_network_config():
    """Two conv stages on 9x9 patches, one hidden FC layer, 64-bit."""
    return NetworkConfig(
        input_side=9,
        input_channels=3,
        conv_channels=(2, 3),
        fc_widths=(4,),
        n_o=3,
        dropout_rate=0.0,
        precision=Precision.FLOAT64,
    )


TINY_RUN_CONFIG = """\
# desk-scale settings for command tests
seed=1
threads=1
dims=48,48,48
translation_range=3
rotation_range_deg=10
noise_sigma=0.02
patch_side=9
conv_channels=2,3
fc_widths=4
dropout_rate=0
batch_size=4
iterations=4
learning_rate=0.01
checkpoint_interval=2
log_interval=1
inference_iterations=3
runtime_repeats=1
precision=float64
"""


@pytest.fixture
def tiny_config_file(tmp_path):
    """A key=value run config matching ``tiny_network_config`` on 48^3 phantoms."""
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_RUN_CONFIG)
    return path


@pytest.fixture
def affine_shapes(small_phantom_config):
    """Flattened landmark vectors of 40 random poses (no rendering)."""
    pose_rng = np.random.default_rng(99)
    offsets = canonical_offsets(small_phantom_config)
    return [
        sample_pose(small_phantom_config, pose_rng)
        .apply(offsets, small_phantom_config.centre)
        .reshape(-1)
        for _ in range(40)
    ]


@pytest.fixture
def fitted_shape_model(affine_shapes):
    """Shape model at the default 0.995 threshold."""
    return fit_shape_model(affine_shapes, 0.995)


@pytest.fixture
def fake_dataset(small_phantom_config):
    """In-memory dataset: 3 training phantoms and 1 test phantom."""
    storage = FakeDatasetStorage()
    for index in range(4):
        volume, landmarks = generate_phantom(small_phantom_config, index)
        storage.add_case(volume, landmarks, Split.TRAIN if index < 3 else Split.TEST)
    return storage
