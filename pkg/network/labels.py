"""Direction-class labels for displacement vectors."""

import numpy as np


def gt_label(d_gt) -> int:
    """Class of the dominant axis of ``d_gt``.

    ``2i`` when ``d_gt[i] > 0`` and ``2i + 1`` otherwise, where ``i`` maximises
    ``|d_gt|`` (the lowest axis wins ties). A zero displacement is class 1.
    """
    d = np.asarray(d_gt, dtype=np.float64).reshape(-1)
    axis = int(np.argmax(np.abs(d)))
    return 2 * axis if d[axis] > 0 else 2 * axis + 1


def gt_labels(d_gt: np.ndarray) -> np.ndarray:
    """Row-wise ``gt_label`` over a ``[n, n_o]`` batch."""
    d = np.asarray(d_gt, dtype=np.float64)
    axes = np.argmax(np.abs(d), axis=1)
    positive = d[np.arange(len(d)), axes] > 0
    return np.where(positive, 2 * axes, 2 * axes + 1).astype(np.int64)


def one_hot(index: int, n_classes: int) -> np.ndarray:
    target = np.zeros(n_classes, dtype=np.float64)
    target[index] = 1.0
    return target


def direction_of(class_index: int, n_o: int) -> np.ndarray:
    """Unit step of a class: +1 on axis ``c // 2`` for even ``c``, -1 for odd."""
    step = np.zeros(n_o, dtype=np.float64)
    step[class_index // 2] = 1.0 if class_index % 2 == 0 else -1.0
    return step
