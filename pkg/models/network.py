"""Network, training-sample and training settings models."""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Tuple

import numpy as np

from micrograd.tensor import Precision
from models.patch import PatchStack


class TrainingMode(Enum):
    """One model per landmark, or one joint model in PCA space."""

    SINGLE = "single"
    MULTI = "multi"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture of the shared conv trunk and the two FC heads.

    The regression head ends in ``n_o`` linear outputs; the classification head
    ends in ``2 * n_o`` softmax outputs.
    """

    input_side: int = 101
    input_channels: int = 3
    conv_channels: Tuple[int, ...] = (32, 32, 64, 64, 128)
    fc_widths: Tuple[int, ...] = (512, 512)
    n_o: int = 3
    dropout_rate: float = 0.5
    precision: Precision = Precision.FLOAT32

    @property
    def n_classes(self) -> int:
        return 2 * self.n_o

    def spatial_sides(self) -> List[int]:
        """Spatial side after each conv+pool stage (floor semantics)."""
        sides = []
        side = self.input_side
        for _ in self.conv_channels:
            side = side // 2
            sides.append(side)
        return sides

    @property
    def trunk_features(self) -> int:
        side = self.spatial_sides()[-1] if self.conv_channels else self.input_side
        channels = self.conv_channels[-1] if self.conv_channels else self.input_channels
        return side * side * channels

    def to_dict(self) -> dict:
        result = asdict(self)
        result["conv_channels"] = list(self.conv_channels)
        result["fc_widths"] = list(self.fc_widths)
        result["precision"] = self.precision.value
        return result


@dataclass(frozen=True, eq=False)
class NetworkOutput:
    """Regression ``d`` (length ``n_o``) and class probabilities ``P`` (``2 n_o``).

    Batched outputs carry a leading batch axis on both arrays.
    """

    d: np.ndarray
    P: np.ndarray


@dataclass(frozen=True, eq=False)
class TrainingSample:
    """Patch plus regression target and one-hot class target."""

    patch: PatchStack
    d_gt: np.ndarray
    p_gt: np.ndarray
    position: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def class_index(self) -> int:
        return int(np.argmax(self.p_gt))


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings (Adam, batch size, loss weighting)."""

    alpha: float = 0.5
    batch_size: int = 64
    iterations: int = 100_000
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    weight_init_sigma: float = 0.1
    seed: int = 0
    b_sample_sigma_multiplier: float = 1.0
    checkpoint_interval: int = 1000
    log_interval: int = 100
    threads: int = 1

    def to_dict(self) -> dict:
        return asdict(self)
