"""PCA shape model fitting over flattened landmark vectors."""

from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from core.errors import ConfigError
from lib_logging.logger import get_logger
from models.dataset import Split
from models.shape import ShapeModel
from storage.interfaces import DatasetRepository
from storage.shape_storage import save_shape_model

logger = get_logger(__name__)

JACOBI_MAX_SWEEPS = 100


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-15) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues sorted non-increasing and the matching eigenvectors as
    columns. Each column's largest-magnitude component is positive (the first
    one wins on ties).
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"jacobi_eigh needs a square matrix, got {a.shape}")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(float(np.linalg.norm(a)), np.finfo(np.float64).tiny)

    for _ in range(JACOBI_MAX_SWEEPS):
        off = float(np.sqrt(np.sum(np.triu(a, 1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= np.finfo(np.float64).tiny:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        logger.warning(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    eigenvectors = v[:, order]
    return eigenvalues, apply_sign_convention(eigenvectors)


def apply_sign_convention(eigenvectors: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive."""
    result = np.array(eigenvectors, dtype=np.float64, copy=True)
    for j in range(result.shape[1]):
        k = int(np.argmax(np.abs(result[:, j])))
        if result[k, j] < 0:
            result[:, j] = -result[:, j]
    return result


def select_n_modes(eigenvalues: np.ndarray, threshold: float) -> int:
    """Smallest count whose cumulative eigenvalue fraction reaches ``threshold``."""
    total = float(np.sum(eigenvalues))
    fractions = np.cumsum(eigenvalues) / total
    reached = np.nonzero(fractions >= threshold - 1e-12)[0]
    n_b = int(reached[0]) + 1 if reached.size else len(eigenvalues)
    return max(1, min(n_b, len(eigenvalues) - 1))


def fit_shape_model(shapes: Sequence[np.ndarray], variance_threshold: float = 0.995) -> ShapeModel:
    """Fit mean and principal modes; the covariance uses 1/(N-1).

    Raises:
        ConfigError: fewer than 2 shapes, ragged shapes, bad threshold or zero variance
    """
    if not 0.0 < variance_threshold <= 1.0:
        raise ConfigError(f"variance threshold must be in (0, 1], got {variance_threshold}")
    if len(shapes) < 2:
        raise ConfigError(f"Shape model needs at least 2 shapes, got {len(shapes)}")
    lengths = {np.asarray(s).shape for s in shapes}
    if len(lengths) != 1:
        raise ConfigError(f"Shapes must share one length, got {sorted(lengths)}")
    data = np.stack([np.asarray(s, dtype=np.float64) for s in shapes])
    if data.ndim != 2 or data.shape[1] % 3 != 0:
        raise ConfigError(f"Shapes must be flattened landmark vectors, got {data.shape}")

    mean = data.mean(axis=0)
    centred = data - mean
    covariance = centred.T @ centred / (len(data) - 1)
    eigenvalues, eigenvectors = jacobi_eigh(covariance)
    eigenvalues = np.maximum(eigenvalues, 0.0)
    if float(np.sum(eigenvalues)) <= 0.0:
        raise ConfigError("Shapes have zero total variance")

    n_b = select_n_modes(eigenvalues, variance_threshold)
    explained = float(np.sum(eigenvalues[:n_b]) / np.sum(eigenvalues))
    logger.info(
        f"Fitted shape model: n_l={data.shape[1] // 3}, n_b={n_b}, "
        f"explained={explained:.6f} from {len(data)} shapes"
    )
    return ShapeModel(
        mean=mean,
        eigenvectors=np.ascontiguousarray(eigenvectors[:, :n_b]),
        eigenvalues=eigenvalues[:n_b].copy(),
    )


class ShapeService:
    """Fits shape models from the training split of a dataset repository."""

    def __init__(self, storage: DatasetRepository):
        self.storage: DatasetRepository = storage

    def training_shapes(self, split: Split = Split.TRAIN) -> list:
        return [self.storage.load_case(e)[1].flatten() for e in self.storage.entries(split)]

    def fit(self, variance_threshold: float = 0.995, split: Split = Split.TRAIN) -> ShapeModel:
        return fit_shape_model(self.training_shapes(split), variance_threshold)

    def fit_and_save(
        self, path: Union[str, Path], variance_threshold: float = 0.995
    ) -> ShapeModel:
        model = self.fit(variance_threshold)
        save_shape_model(model, path)
        return model
