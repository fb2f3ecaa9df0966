"""Storage package: file formats and the dataset repository."""

from .checkpoint_storage import Checkpoint, load_checkpoint, save_checkpoint
from .dataset_storage import ManifestDatasetStorage, read_manifest, write_manifest
from .interfaces import DatasetRepository
from .landmark_storage import read_landmarks, write_landmarks
from .shape_storage import load_shape_model, save_shape_model
from .volume_storage import read_volume, write_volume

__all__ = [
    "read_volume",
    "write_volume",
    "read_landmarks",
    "write_landmarks",
    "load_shape_model",
    "save_shape_model",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "ManifestDatasetStorage",
    "read_manifest",
    "write_manifest",
    "DatasetRepository",
]
