"""Evaluation results."""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np


@dataclass(frozen=True)
class VariantSpec:
    """A trained-loss / inference-rule pairing evaluated as one table column."""

    name: str
    alpha: float
    rule: str
    loss_label: str


@dataclass(eq=False)
class EvalResult:
    """Errors (mm) of one evaluated configuration over the test split.

    ``errors`` is ``[n_volumes, n_landmarks]``; ``initial_errors`` holds the error
    of the averaged start positions before any update.
    """

    name: str
    errors: np.ndarray
    runtimes: List[float]
    initial_errors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    fingerprint: Dict[str, str] = field(default_factory=dict)

    @property
    def n_landmarks(self) -> int:
        return int(self.errors.shape[1]) if self.errors.ndim == 2 else 0

    @property
    def per_landmark_mean(self) -> np.ndarray:
        return self.errors.mean(axis=0)

    @property
    def per_landmark_sd(self) -> np.ndarray:
        return self.errors.std(axis=0)

    @property
    def overall_mean(self) -> float:
        return float(self.errors.mean())

    @property
    def overall_sd(self) -> float:
        return float(self.errors.std())

    @property
    def mean_runtime(self) -> float:
        return float(np.mean(self.runtimes)) if self.runtimes else 0.0

    def improved_fraction(self) -> float:
        """Fraction of volumes whose mean error dropped below the initial error."""
        if self.initial_errors.size == 0:
            return 0.0
        final = self.errors.mean(axis=1)
        initial = self.initial_errors.mean(axis=1)
        return float(np.mean(final < initial))
