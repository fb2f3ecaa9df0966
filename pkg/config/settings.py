"""Flat ``key=value`` run configuration with defaults, overrides and echo."""

import os
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

from core.errors import ConfigError
from lib_logging.logger import get_logger
from micrograd.tensor import Precision
from models.inference import InferenceConfig, UpdateRule
from models.network import NetworkConfig, TrainConfig
from models.phantom import PhantomConfig
from storage.atomic import atomic_write_text

logger = get_logger(__name__)

ECHO_FILE = "effective_config_{stage}.txt"

DEFAULTS: Dict[str, str] = {
    "seed": "0",
    "threads": "0",
    "dims": "64,64,64",
    "spacing": "0.5",
    "n_landmarks": "10",
    "translation_range": "8",
    "rotation_range_deg": "20",
    "scale_min": "0.85",
    "scale_max": "1.15",
    "noise_sigma": "0.05",
    "patch_side": "101",
    "conv_channels": "32,32,64,64,128",
    "fc_widths": "512,512",
    "dropout_rate": "0.5",
    "alpha": "0.5",
    "batch_size": "64",
    "iterations": "100000",
    "learning_rate": "0.001",
    "beta1": "0.9",
    "beta2": "0.999",
    "adam_epsilon": "1e-8",
    "weight_init_sigma": "0.1",
    "b_sample_sigma_multiplier": "1.0",
    "checkpoint_interval": "1000",
    "log_interval": "100",
    "rule": "C",
    "inference_iterations": "0",
    "early_stop_epsilon": "0.001",
    "n_random_inits_multi": "5",
    "variance_threshold": "0.995",
    "runtime_repeats": "3",
    "precision": "float32",
}


class RunConfig:
    """Every key has a default; unknown keys are errors."""

    def __init__(self, values: Optional[Mapping[str, str]] = None):
        self._values: Dict[str, str] = dict(DEFAULTS)
        self._apply(values or {}, source="<overrides>")

    def _apply(self, values: Mapping[str, object], source: str) -> None:
        for key, value in values.items():
            if key not in DEFAULTS:
                raise ConfigError(f"{source}: unknown config key {key!r}")
            self._values[key] = str(value).strip()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as e:
            raise ConfigError(f"{path}: not valid UTF-8 ({e.reason})")
        values: Dict[str, str] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"{path}, line {number}: expected key=value, got {raw!r}")
            if key.strip() not in DEFAULTS:
                raise ConfigError(f"{path}, line {number}: unknown config key {key.strip()!r}")
            values[key.strip()] = value.strip()
        return cls(values)

    def with_overrides(self, overrides: Mapping[str, object]) -> "RunConfig":
        """New config with ``overrides`` applied; ``None`` values are ignored."""
        merged = dict(self._values)
        merged.update({k: str(v) for k, v in overrides.items() if v is not None})
        return RunConfig(merged)

    def get(self, key: str) -> str:
        if key not in self._values:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def get_int(self, key: str) -> int:
        try:
            return int(self.get(key))
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {self.get(key)!r}")

    def get_float(self, key: str) -> float:
        try:
            return float(self.get(key))
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {self.get(key)!r}")

    def get_ints(self, key: str) -> Tuple[int, ...]:
        try:
            return tuple(int(v) for v in self.get(key).split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"{key} must be comma-separated integers, got {self.get(key)!r}")

    @property
    def seed(self) -> int:
        return self.get_int("seed")

    @property
    def threads(self) -> int:
        """Worker count; 0 means one per CPU."""
        threads = self.get_int("threads")
        return threads if threads > 0 else (os.cpu_count() or 1)

    def phantom_config(self) -> PhantomConfig:
        dims = self.get_ints("dims")
        if len(dims) != 3:
            raise ConfigError(f"dims needs 3 values, got {self.get('dims')!r}")
        return PhantomConfig(
            dims=(dims[0], dims[1], dims[2]),
            spacing=self.get_float("spacing"),
            n_landmarks=self.get_int("n_landmarks"),
            translation_range=self.get_float("translation_range"),
            rotation_range_deg=self.get_float("rotation_range_deg"),
            scale_min=self.get_float("scale_min"),
            scale_max=self.get_float("scale_max"),
            noise_sigma=self.get_float("noise_sigma"),
            seed=self.seed,
        )

    def network_config(self, input_channels: int = 3, n_o: int = 3) -> NetworkConfig:
        try:
            precision = Precision(self.get("precision"))
        except ValueError:
            raise ConfigError(f"precision must be float32 or float64, got {self.get('precision')!r}")
        return NetworkConfig(
            input_side=self.get_int("patch_side"),
            input_channels=input_channels,
            conv_channels=self.get_ints("conv_channels"),
            fc_widths=self.get_ints("fc_widths"),
            n_o=n_o,
            dropout_rate=self.get_float("dropout_rate"),
            precision=precision,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            alpha=self.get_float("alpha"),
            batch_size=self.get_int("batch_size"),
            iterations=self.get_int("iterations"),
            learning_rate=self.get_float("learning_rate"),
            beta1=self.get_float("beta1"),
            beta2=self.get_float("beta2"),
            adam_epsilon=self.get_float("adam_epsilon"),
            weight_init_sigma=self.get_float("weight_init_sigma"),
            seed=self.seed,
            b_sample_sigma_multiplier=self.get_float("b_sample_sigma_multiplier"),
            checkpoint_interval=self.get_int("checkpoint_interval"),
            log_interval=self.get_int("log_interval"),
            threads=self.threads,
        )

    def inference_config(
        self, rule: Optional[str] = None, record_trajectory: bool = False
    ) -> InferenceConfig:
        try:
            update_rule = UpdateRule((rule or self.get("rule")).upper())
        except ValueError:
            raise ConfigError(f"rule must be A, B or C, got {rule or self.get('rule')!r}")
        iterations = self.get_int("inference_iterations")
        return InferenceConfig(
            rule=update_rule,
            iterations=iterations if iterations > 0 else None,
            early_stop_epsilon=self.get_float("early_stop_epsilon"),
            n_random_inits_multi=self.get_int("n_random_inits_multi"),
            seed=self.seed,
            record_trajectory=record_trajectory,
        )

    def to_dict(self) -> Dict[str, str]:
        return dict(self._values)

    def to_text(self) -> str:
        return "".join(f"{key}={self._values[key]}\n" for key in sorted(self._values))

    def echo(self, directory: Union[str, Path], stage: str) -> Path:
        """Write the effective config into ``directory`` as ``effective_config_<stage>.txt``."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        path = out / ECHO_FILE.format(stage=stage)
        atomic_write_text(path, self.to_text())
        logger.debug(f"Echoed effective config to {path}")
        return path
