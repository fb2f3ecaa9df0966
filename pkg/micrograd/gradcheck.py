"""Central finite-difference check of analytic gradients."""

from typing import Callable, Sequence

import numpy as np

from micrograd.tensor import Tensor, zero_grads


def finite_difference_check(
    graph: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    epsilon: float = 1e-6,
    seed: int = 0,
) -> float:
    """Return the max relative error between analytic and numeric gradients.

    ``graph`` rebuilds the computation from the current data of ``inputs`` (leaf
    tensors with ``requires_grad``). A non-scalar output is reduced to a scalar
    by a fixed random projection, so every output element takes part. The error
    of one element is ``|analytic - numeric| / max(1, |analytic|)``.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon must be in [1e-7, 1e-3], got {epsilon}")

    rng = np.random.default_rng(seed)
    zero_grads(inputs)
    out = graph()
    direction = rng.standard_normal(out.shape).astype(out.dtype)
    out.backward(direction)
    analytic = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in inputs
    ]

    def objective() -> float:
        return float(np.sum(graph().data * direction))

    worst = 0.0
    for tensor, grad in zip(inputs, analytic):
        tensor.data = np.ascontiguousarray(tensor.data)
        flat = tensor.data.reshape(-1)
        flat_grad = grad.reshape(-1)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + epsilon
            plus = objective()
            flat[k] = original - epsilon
            minus = objective()
            flat[k] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            error = abs(flat_grad[k] - numeric) / max(1.0, abs(flat_grad[k]))
            worst = max(worst, float(error))
    zero_grads(inputs)
    return worst
