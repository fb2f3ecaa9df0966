"""PCA shape model over flattened landmark vectors."""

from dataclasses import dataclass

import numpy as np

from core.errors import ShapeError


@dataclass(frozen=True, eq=False)
class ShapeModel:
    """Mean shape, orthonormal modes (columns) and per-mode variances.

    ``X = mean + W b`` maps reduced coordinates to a shape and
    ``b = W^T (X - mean)`` projects back.
    """

    mean: np.ndarray
    eigenvectors: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        dim = self.mean.shape[0] if self.mean.ndim == 1 else -1
        if dim <= 0 or dim % 3 != 0:
            raise ShapeError("ShapeModel mean", "[3 * n_l]", self.mean.shape)
        if self.eigenvectors.ndim != 2 or self.eigenvectors.shape[0] != dim:
            raise ShapeError("ShapeModel eigenvectors", f"({dim}, n_b)", self.eigenvectors.shape)
        n_b = self.eigenvectors.shape[1]
        if self.eigenvalues.shape != (n_b,):
            raise ShapeError("ShapeModel eigenvalues", (n_b,), self.eigenvalues.shape)
        if not 1 <= n_b < dim:
            raise ValueError(f"n_b must satisfy 1 <= n_b < 3*n_l = {dim}, got {n_b}")
        for array in (self.mean, self.eigenvectors, self.eigenvalues):
            array.setflags(write=False)

    @property
    def n_landmarks(self) -> int:
        return int(self.mean.shape[0] // 3)

    @property
    def n_modes(self) -> int:
        return int(self.eigenvectors.shape[1])

    def to_b(self, flat_shape: np.ndarray) -> np.ndarray:
        """Project a flattened landmark vector onto the modes."""
        x = np.asarray(flat_shape, dtype=np.float64)
        if x.shape != self.mean.shape:
            raise ShapeError("to_b", self.mean.shape, x.shape)
        return self.eigenvectors.T @ (x - self.mean)

    def to_x(self, b: np.ndarray) -> np.ndarray:
        """Reconstruct a flattened landmark vector from reduced coordinates."""
        coords = np.asarray(b, dtype=np.float64)
        if coords.shape != (self.n_modes,):
            raise ShapeError("to_x", (self.n_modes,), coords.shape)
        return self.mean + self.eigenvectors @ coords

    def mode_limits(self, n_sigma: float = 3.0) -> np.ndarray:
        """Per-mode bound ``n_sigma * sqrt(eigenvalue)``."""
        return n_sigma * np.sqrt(np.maximum(self.eigenvalues, 0.0))
