"""Joint regression / classification loss.

``L = (1 - alpha) / (n_o * n) * sum ||d_gt - d||^2 - alpha / n * sum log P[c_gt]``
with ``P[c_gt]`` clamped at ``PROB_FLOOR``.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.errors import ShapeError
from micrograd.tensor import Tensor

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossTerms:
    """Loss value and its two unweighted terms."""

    total: float
    regression: float
    classification: float


def _check(d: np.ndarray, P: np.ndarray, d_gt: np.ndarray, classes: np.ndarray) -> None:
    if d.ndim != 2 or d.shape[0] == 0:
        raise ShapeError("loss d", "[n, n_o] with n >= 1", d.shape)
    if d_gt.shape != d.shape:
        raise ShapeError("loss d_gt", d.shape, d_gt.shape)
    if P.shape != (d.shape[0], 2 * d.shape[1]):
        raise ShapeError("loss P", (d.shape[0], 2 * d.shape[1]), P.shape)
    if classes.shape != (d.shape[0],):
        raise ShapeError("loss classes", (d.shape[0],), classes.shape)


def loss_terms(
    d: np.ndarray, P: np.ndarray, d_gt: np.ndarray, classes: np.ndarray, alpha: float
) -> LossTerms:
    """Evaluate the loss on plain arrays (no graph)."""
    d = np.asarray(d, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    d_gt = np.asarray(d_gt, dtype=np.float64)
    classes = np.asarray(classes, dtype=np.int64)
    _check(d, P, d_gt, classes)
    n, n_o = d.shape
    regression = float(np.sum((d_gt - d) ** 2) / (n_o * n))
    picked = np.maximum(P[np.arange(n), classes], PROB_FLOOR)
    classification = float(-np.sum(np.log(picked)) / n)
    total = (1.0 - alpha) * regression + alpha * classification
    return LossTerms(total, regression, classification)


def joint_loss(
    d: Tensor, P: Tensor, d_gt: np.ndarray, classes: np.ndarray, alpha: float
) -> Tuple[Tensor, LossTerms]:
    """Graph node for the loss; gradients reach both heads.

    The clamped probabilities get zero gradient; at ``alpha == 0`` the
    classification head receives an all-zero gradient.
    """
    d_gt = np.asarray(d_gt, dtype=np.float64)
    classes = np.asarray(classes, dtype=np.int64)
    terms = loss_terms(d.data, P.data, d_gt, classes, alpha)
    n, n_o = d.shape
    rows = np.arange(n)

    def backward(grad: np.ndarray) -> None:
        g = float(np.asarray(grad).reshape(-1)[0])
        if d.requires_grad:
            dd = (1.0 - alpha) * 2.0 * (d.data.astype(np.float64) - d_gt) / (n_o * n)
            d.accumulate((g * dd).astype(d.dtype))
        if P.requires_grad:
            dP = np.zeros(P.shape, dtype=np.float64)
            picked = P.data[rows, classes].astype(np.float64)
            live = picked > PROB_FLOOR
            dP[rows[live], classes[live]] = -alpha / (n * picked[live])
            P.accumulate((g * dP).astype(P.dtype))

    out = Tensor.from_op(
        np.array(terms.total, dtype=d.dtype), (d, P), backward, "pin_loss"
    )
    return out, terms
