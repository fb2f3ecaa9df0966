"""Inference settings and the update-rule enumeration."""

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional


class UpdateRule(Enum):
    """How a network output moves the current point.

    A: one voxel along the most probable direction class.
    B: add the regressed displacement.
    C: add the displacement weighted by per-axis class confidence.
    """

    A = "A"
    B = "B"
    C = "C"

    def __str__(self):
        return self.value

    @property
    def default_iterations(self) -> int:
        return 350 if self is UpdateRule.A else 10


@dataclass(frozen=True)
class InferenceConfig:
    """Iteration count, early stopping and multi-start settings."""

    rule: UpdateRule = UpdateRule.C
    iterations: Optional[int] = None  # None: rule default
    early_stop_epsilon: float = 1e-3
    n_random_inits_multi: int = 5
    seed: int = 0
    record_trajectory: bool = False

    @property
    def T(self) -> int:
        return self.iterations if self.iterations else self.rule.default_iterations

    @property
    def effective_epsilon(self) -> float:
        """Early stopping applies to Rules B and C only; Rule A steps are unit length."""
        return 0.0 if self.rule is UpdateRule.A else self.early_stop_epsilon

    def to_dict(self) -> dict:
        result = asdict(self)
        result["rule"] = self.rule.value
        result["T"] = self.T
        return result
