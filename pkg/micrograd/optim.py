"""Adam optimiser with per-block state."""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from core.errors import NonFiniteError, ShapeError
from micrograd.tensor import Tensor


@dataclass
class AdamState:
    """Moments and step count of one parameter block."""

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: Optional[np.ndarray] = None
    second_moment: Optional[np.ndarray] = None

    def ensure_moments(self, like: np.ndarray) -> None:
        if self.first_moment is None:
            self.first_moment = np.zeros_like(like)
        if self.second_moment is None:
            self.second_moment = np.zeros_like(like)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    name: str = "params",
) -> Tuple[np.ndarray, AdamState]:
    """Apply one bias-corrected Adam update; returns the new params and state.

    The input arrays are not modified.
    """
    if params.shape != grads.shape:
        raise ShapeError(f"adam_step {name}", params.shape, grads.shape)
    if not np.isfinite(grads).all():
        raise NonFiniteError(f"gradient of parameter block '{name}'")

    state.ensure_moments(params)
    assert state.first_moment is not None and state.second_moment is not None

    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    m = b1 * state.first_moment + (1.0 - b1) * grads
    v = b2 * state.second_moment + (1.0 - b2) * (grads * grads)
    m_hat = m / (1.0 - b1**t)
    v_hat = v / (1.0 - b2**t)
    update = state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_params = (params - update).astype(params.dtype, copy=False)

    new_state = AdamState(
        learning_rate=state.learning_rate,
        beta1=b1,
        beta2=b2,
        epsilon=state.epsilon,
        step_count=t,
        first_moment=m.astype(params.dtype, copy=False),
        second_moment=v.astype(params.dtype, copy=False),
    )
    return new_params, new_state


@dataclass
class Adam:
    """Adam over a named set of parameter tensors (single writer)."""

    params: Mapping[str, Tensor]
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    states: Dict[str, AdamState] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in self.params:
            self.states.setdefault(
                name,
                AdamState(
                    learning_rate=self.learning_rate,
                    beta1=self.beta1,
                    beta2=self.beta2,
                    epsilon=self.epsilon,
                ),
            )

    @property
    def step_count(self) -> int:
        return max((s.step_count for s in self.states.values()), default=0)

    def zero_grad(self) -> None:
        for tensor in self.params.values():
            tensor.zero_grad()

    def step(self) -> None:
        """Update every block in declaration order; a block with no grad sees zeros."""
        for name, tensor in self.params.items():
            grads = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
            tensor.data, self.states[name] = adam_step(
                tensor.data, grads, self.states[name], name=name
            )
