"""Domain models for the PIN landmark pipeline."""

from .dataset import ManifestEntry, Split
from .evaluation import EvalResult, VariantSpec
from .inference import InferenceConfig, UpdateRule
from .network import (
    NetworkConfig,
    NetworkOutput,
    TrainConfig,
    TrainingMode,
    TrainingSample,
)
from .patch import PLANE_ORDER, PatchStack, Plane
from .phantom import PhantomConfig
from .shape import ShapeModel
from .volume import LandmarkSet, Volume, voxel_to_mm

__all__ = [
    "Volume",
    "LandmarkSet",
    "voxel_to_mm",
    "PatchStack",
    "Plane",
    "PLANE_ORDER",
    "ShapeModel",
    "PhantomConfig",
    "NetworkConfig",
    "NetworkOutput",
    "TrainConfig",
    "TrainingMode",
    "TrainingSample",
    "InferenceConfig",
    "UpdateRule",
    "ManifestEntry",
    "Split",
    "EvalResult",
    "VariantSpec",
]
