"""Minimal tensor and reverse-mode autodiff engine for the PIN network."""

from .gradcheck import finite_difference_check
from .layers import (
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
from .optim import Adam, AdamState, adam_step
from .tensor import Precision, Tensor, zero_grads

__all__ = [
    "Tensor",
    "Precision",
    "zero_grads",
    "LayerKind",
    "LayerSpec",
    "Mode",
    "conv3x3",
    "maxpool2x2",
    "dense",
    "relu",
    "softmax",
    "dropout",
    "flatten",
    "Adam",
    "AdamState",
    "adam_step",
    "finite_difference_check",
]
