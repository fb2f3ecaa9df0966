"""The PIN graph: shared conv trunk, regression head and classification head."""

from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.stats import truncnorm

from core.errors import InvalidHeaderError, ShapeError
from micrograd.layers import (
    LayerKind,
    LayerSpec,
    Mode,
    conv3x3,
    dense,
    dropout,
    flatten,
    maxpool2x2,
    relu,
    softmax,
)
from micrograd.tensor import Precision, Tensor
from models.network import NetworkConfig, NetworkOutput
from models.patch import PLANE_ORDER, PatchStack
from storage.checkpoint_storage import Checkpoint

HEADS = ("reg", "cls")
PLANE_ORDER_TEXT = ",".join(str(p) for p in PLANE_ORDER)


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def network_manifest(config: NetworkConfig) -> Dict[str, str]:
    """Architecture keys stored in a checkpoint manifest."""
    return {
        "input_side": str(config.input_side),
        "input_channels": str(config.input_channels),
        "conv_channels": ",".join(str(c) for c in config.conv_channels),
        "fc_widths": ",".join(str(w) for w in config.fc_widths),
        "n_o": str(config.n_o),
        "dropout_rate": repr(config.dropout_rate),
        "precision": config.precision.value,
        "plane_order": PLANE_ORDER_TEXT,
    }


def network_config_from_manifest(manifest: Mapping[str, str]) -> NetworkConfig:
    try:
        if manifest.get("plane_order", PLANE_ORDER_TEXT) != PLANE_ORDER_TEXT:
            raise InvalidHeaderError(
                f"checkpoint plane order {manifest['plane_order']!r} "
                f"differs from {PLANE_ORDER_TEXT!r}"
            )
        return NetworkConfig(
            input_side=int(manifest["input_side"]),
            input_channels=int(manifest["input_channels"]),
            conv_channels=_ints(manifest["conv_channels"]),
            fc_widths=_ints(manifest["fc_widths"]),
            n_o=int(manifest["n_o"]),
            dropout_rate=float(manifest["dropout_rate"]),
            precision=Precision(manifest.get("precision", "float32")),
        )
    except (KeyError, ValueError) as e:
        raise InvalidHeaderError(f"checkpoint manifest lacks a valid network key: {e}")


def parameter_shapes(config: NetworkConfig) -> Dict[str, Tuple[int, ...]]:
    """Parameter block shapes in declaration order."""
    shapes: Dict[str, Tuple[int, ...]] = {}
    c_in = config.input_channels
    for k, c_out in enumerate(config.conv_channels, start=1):
        shapes[f"conv{k}.kernel"] = (3, 3, c_in, c_out)
        shapes[f"conv{k}.bias"] = (c_out,)
        c_in = c_out
    for head, width_out in zip(HEADS, (config.n_o, config.n_classes)):
        n_in = config.trunk_features
        for j, width in enumerate(config.fc_widths, start=1):
            shapes[f"{head}_fc{j}.weight"] = (n_in, width)
            shapes[f"{head}_fc{j}.bias"] = (width,)
            n_in = width
        shapes[f"{head}_out.weight"] = (n_in, width_out)
        shapes[f"{head}_out.bias"] = (width_out,)
    return shapes


class PinNetwork:
    """Conv trunk (conv3x3 + ReLU + maxpool per stage) feeding two FC heads.

    Each head is ``[dense, relu, dropout] * len(fc_widths)`` followed by a final
    dense layer; the classification head ends in a softmax.
    """

    def __init__(self, config: NetworkConfig, params: Dict[str, Tensor]):
        expected = parameter_shapes(config)
        if list(params) != list(expected):
            raise ShapeError("PinNetwork params", list(expected), list(params))
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ShapeError(f"PinNetwork {name}", shape, params[name].shape)
        self.config = config
        self.params = params

    @classmethod
    def initialise(
        cls, config: NetworkConfig, sigma: float, rng: np.random.Generator
    ) -> "PinNetwork":
        """Weights from a zero-mean normal truncated at +/-2 sigma; biases zero."""
        dtype = config.precision.dtype
        params: Dict[str, Tensor] = {}
        for name, shape in parameter_shapes(config).items():
            if name.endswith(".bias"):
                data = np.zeros(shape, dtype=dtype)
            else:
                data = truncnorm.rvs(
                    -2.0, 2.0, loc=0.0, scale=sigma, size=shape, random_state=rng
                ).astype(dtype)
            params[name] = Tensor(data, requires_grad=True)
        return cls(config, params)

    def layer_specs(self) -> List[LayerSpec]:
        """Architecture as a flat list: trunk, then regression head, then classification head."""
        cfg = self.config
        specs: List[LayerSpec] = []
        c_in = cfg.input_channels
        for c_out in cfg.conv_channels:
            specs.append(LayerSpec(LayerKind.CONV3X3, c_in, c_out))
            specs.append(LayerSpec(LayerKind.RELU, c_out, c_out))
            specs.append(LayerSpec(LayerKind.MAXPOOL2X2, c_out, c_out))
            c_in = c_out
        for width_out in (cfg.n_o, cfg.n_classes):
            n_in = cfg.trunk_features
            for width in cfg.fc_widths:
                specs.append(LayerSpec(LayerKind.DENSE, n_in, width))
                specs.append(LayerSpec(LayerKind.RELU, width, width))
                specs.append(LayerSpec(LayerKind.DROPOUT, width, width, cfg.dropout_rate))
                n_in = width
            specs.append(LayerSpec(LayerKind.DENSE, n_in, width_out))
        specs.append(LayerSpec(LayerKind.SOFTMAX, cfg.n_classes, cfg.n_classes))
        return specs

    def _head(
        self, features: Tensor, head: str, mode: Mode, rng: Optional[np.random.Generator]
    ) -> Tensor:
        h = features
        for j in range(1, len(self.config.fc_widths) + 1):
            h = dense(h, self.params[f"{head}_fc{j}.weight"], self.params[f"{head}_fc{j}.bias"])
            h = relu(h)
            h = dropout(h, self.config.dropout_rate, mode, rng)
        return dense(h, self.params[f"{head}_out.weight"], self.params[f"{head}_out.bias"])

    def forward_graph(
        self,
        patches: np.ndarray,
        mode: Mode = Mode.INFER,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[Tensor, Tensor]:
        """Graph outputs ``(d, P)`` for ``[s, s, c]`` or ``[n, s, s, c]`` input."""
        cfg = self.config
        data = np.asarray(patches, dtype=cfg.precision.dtype)
        if data.shape[-3:] != (cfg.input_side, cfg.input_side, cfg.input_channels):
            raise ShapeError(
                "PinNetwork input",
                (cfg.input_side, cfg.input_side, cfg.input_channels),
                data.shape,
            )
        h = Tensor(data)
        for k in range(1, len(cfg.conv_channels) + 1):
            h = conv3x3(h, self.params[f"conv{k}.kernel"], self.params[f"conv{k}.bias"])
            h = relu(h)
            h = maxpool2x2(h)
        features = flatten(h)
        d = self._head(features, "reg", mode, rng)
        P = softmax(self._head(features, "cls", mode, rng))
        return d, P

    def forward(
        self,
        patch: PatchStack,
        mode: Mode = Mode.INFER,
        rng: Optional[np.random.Generator] = None,
    ) -> NetworkOutput:
        d, P = self.forward_graph(patch.data, mode, rng)
        return NetworkOutput(d=d.data.copy(), P=P.data.copy())

    def predict(
        self, patches: np.ndarray, positions: Optional[np.ndarray] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Infer-mode batch prediction; ``positions`` is ignored by the network."""
        d, P = self.forward_graph(patches, Mode.INFER)
        return d.data.astype(np.float64), P.data.astype(np.float64)

    @property
    def n_o(self) -> int:
        return self.config.n_o

    def to_checkpoint(self, extra: Optional[Mapping[str, str]] = None) -> Checkpoint:
        manifest = network_manifest(self.config)
        manifest.update({k: str(v) for k, v in (extra or {}).items()})
        blocks = {name: tensor.data.copy() for name, tensor in self.params.items()}
        return Checkpoint(manifest=manifest, blocks=blocks)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "PinNetwork":
        config = network_config_from_manifest(checkpoint.manifest)
        expected = parameter_shapes(config)
        missing = [name for name in expected if name not in checkpoint.blocks]
        if missing:
            raise InvalidHeaderError(f"checkpoint lacks parameter blocks {missing}")
        params = {
            name: Tensor(
                np.array(checkpoint.blocks[name], dtype=config.precision.dtype),
                requires_grad=True,
            )
            for name in expected
        }
        return cls(config, params)
