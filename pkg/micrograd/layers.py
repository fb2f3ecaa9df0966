"""The six layer kinds of the PIN network, each with its backward pass.

Every layer accepts an optional leading batch axis: ``conv3x3`` and
``maxpool2x2`` take ``[h, w, c]`` or ``[n, h, w, c]``; ``dense``, ``softmax``
take ``[k]`` or ``[n, k]``.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from core.errors import ConfigError, ShapeError
from micrograd.tensor import Tensor

_OFFSETS = [(i, j) for i in range(3) for j in range(3)]


class LayerKind(Enum):
    """Kinds of layer the engine implements."""

    CONV3X3 = "conv3x3"
    MAXPOOL2X2 = "maxpool2x2"
    DENSE = "dense"
    RELU = "relu"
    SOFTMAX = "softmax"
    DROPOUT = "dropout"

    def __str__(self):
        return self.value


class Mode(Enum):
    """Train mode enables dropout; infer mode is deterministic."""

    TRAIN = "train"
    INFER = "infer"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class LayerSpec:
    """One layer of an architecture description.

    conv3x3 has stride 1 and "same" zero padding; maxpool2x2 has stride 2.
    """

    kind: LayerKind
    fan_in: int
    fan_out: int
    dropout_rate: float = 0.0

    def to_dict(self) -> dict:
        result = {"kind": self.kind.value, "fan_in": self.fan_in, "fan_out": self.fan_out}
        if self.kind == LayerKind.DROPOUT:
            result["dropout_rate"] = self.dropout_rate
        return result


def _batched(x: Tensor, spatial: bool, op: str):
    """Return (array with batch axis, whether the input was unbatched)."""
    unbatched_ndim = 3 if spatial else 1
    if x.data.ndim == unbatched_ndim:
        return x.data[None], True
    if x.data.ndim == unbatched_ndim + 1:
        return x.data, False
    expected = "[h, w, c] or [n, h, w, c]" if spatial else "[k] or [n, k]"
    raise ShapeError(op, expected, x.shape)


def conv3x3(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """3x3 cross-correlation, stride 1, zero padding of 1 on every border."""
    xd, unbatched = _batched(x, spatial=True, op="conv3x3")
    n, h, w, c_in = xd.shape
    if kernels.data.ndim != 4 or kernels.shape[:3] != (3, 3, c_in):
        raise ShapeError("conv3x3 kernels", f"(3, 3, {c_in}, c_out)", kernels.shape)
    c_out = kernels.shape[3]
    if bias.shape != (c_out,):
        raise ShapeError("conv3x3 bias", (c_out,), bias.shape)

    padded = np.pad(xd, ((0, 0), (1, 1), (1, 1), (0, 0)))
    # im2col: channel blocks ordered by kernel offset (i, j), matching the
    # C-order reshape of kernels[i, j, c, o] into [(i*3 + j)*c_in + c, o]
    cols = np.concatenate(
        [padded[:, i : i + h, j : j + w, :] for i, j in _OFFSETS], axis=-1
    )
    k2 = kernels.data.reshape(9 * c_in, c_out)
    out = cols @ k2 + bias.data

    def backward(grad: np.ndarray) -> None:
        g = grad[None] if unbatched else grad
        if kernels.requires_grad:
            kernels.accumulate(
                (cols.reshape(-1, 9 * c_in).T @ g.reshape(-1, c_out)).reshape(
                    kernels.shape
                )
            )
        if bias.requires_grad:
            bias.accumulate(g.sum(axis=(0, 1, 2)))
        if x.requires_grad:
            dcols = g @ k2.T
            dpad = np.zeros_like(padded)
            for idx, (i, j) in enumerate(_OFFSETS):
                dpad[:, i : i + h, j : j + w, :] += dcols[
                    ..., idx * c_in : (idx + 1) * c_in
                ]
            dx = dpad[:, 1:-1, 1:-1, :]
            x.accumulate(dx[0] if unbatched else dx)

    return Tensor.from_op(out[0] if unbatched else out, (x, kernels, bias), backward, "conv3x3")


def maxpool2x2(x: Tensor) -> Tensor:
    """2x2 max pooling, stride 2; an odd trailing row/column is dropped."""
    xd, unbatched = _batched(x, spatial=True, op="maxpool2x2")
    n, h, w, c = xd.shape
    if h < 2 or w < 2:
        raise ShapeError("maxpool2x2", "h >= 2 and w >= 2", x.shape)
    h2, w2 = h // 2, w // 2

    blocks = (
        xd[:, : 2 * h2, : 2 * w2, :]
        .reshape(n, h2, 2, w2, 2, c)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, h2, w2, c, 4)
    )
    # ties resolve to the first cell of the block in row-major order
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(grad: np.ndarray) -> None:
        g = grad[None] if unbatched else grad
        gblocks = np.zeros((n, h2, w2, c, 4), dtype=xd.dtype)
        np.put_along_axis(gblocks, arg[..., None], g[..., None], axis=-1)
        routed = (
            gblocks.reshape(n, h2, w2, c, 2, 2)
            .transpose(0, 1, 4, 2, 5, 3)
            .reshape(n, 2 * h2, 2 * w2, c)
        )
        dx = np.zeros_like(xd)
        dx[:, : 2 * h2, : 2 * w2, :] = routed
        x.accumulate(dx[0] if unbatched else dx)

    return Tensor.from_op(out[0] if unbatched else out, (x,), backward, "maxpool2x2")


def dense(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Fully connected layer: ``x @ weights + bias``."""
    xd, unbatched = _batched(x, spatial=False, op="dense")
    n_in = xd.shape[1]
    if weights.data.ndim != 2 or weights.shape[0] != n_in:
        raise ShapeError("dense weights", f"({n_in}, m)", weights.shape)
    m = weights.shape[1]
    if bias.shape != (m,):
        raise ShapeError("dense bias", (m,), bias.shape)

    out = xd @ weights.data + bias.data

    def backward(grad: np.ndarray) -> None:
        g = grad[None] if unbatched else grad
        if weights.requires_grad:
            weights.accumulate(xd.T @ g)
        if bias.requires_grad:
            bias.accumulate(g.sum(axis=0))
        if x.requires_grad:
            dx = g @ weights.data.T
            x.accumulate(dx[0] if unbatched else dx)

    return Tensor.from_op(out[0] if unbatched else out, (x, weights, bias), backward, "dense")


def relu(x: Tensor) -> Tensor:
    """Elementwise max(x, 0); the gradient at exactly 0 is 0."""
    mask = x.data > 0
    out = np.where(mask, x.data, 0).astype(x.dtype, copy=False)

    def backward(grad: np.ndarray) -> None:
        x.accumulate(grad * mask)

    return Tensor.from_op(out, (x,), backward, "relu")


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, computed with max-subtraction."""
    if x.data.ndim not in (1, 2) or x.shape[-1] < 1:
        raise ShapeError("softmax", "[k] or [n, k] with k >= 1", x.shape)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=-1, keepdims=True)

    def backward(grad: np.ndarray) -> None:
        x.accumulate(p * (grad - (grad * p).sum(axis=-1, keepdims=True)))

    return Tensor.from_op(p, (x,), backward, "softmax")


def dropout(
    x: Tensor,
    rate: float,
    mode: Mode,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """Inverted dropout: survivors are scaled by 1/(1 - rate); infer mode is identity."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == Mode.INFER or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in train mode needs a seeded generator")

    scale = 1.0 / (1.0 - rate)
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) * x.dtype.type(scale)
    out = x.data * mask

    def backward(grad: np.ndarray) -> None:
        x.accumulate(grad * mask)

    return Tensor.from_op(out, (x,), backward, "dropout")


def flatten(x: Tensor) -> Tensor:
    """Collapse all non-batch axes: ``[h, w, c] -> [h*w*c]``, ``[n, h, w, c] -> [n, h*w*c]``."""
    batched = x.data.ndim == 4
    shape = x.shape
    out = x.data.reshape(shape[0], -1) if batched else x.data.reshape(-1)

    def backward(grad: np.ndarray) -> None:
        x.accumulate(grad.reshape(shape))

    return Tensor.from_op(out, (x,), backward, "flatten")
