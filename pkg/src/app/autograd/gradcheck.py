import logging
from typing import Callable, Sequence

import numpy as np

from app.autograd.tensor import Tape, Tensor
from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory

logger = logging.getLogger(__name__)


def _ensure_differentiable(inputs: Sequence[Tensor]) -> None:
    for index, tensor in enumerate(inputs):
        if not tensor.requires_grad:
            label = tensor.name or f"input {index}"
            detail = f"gradient_check: {label} was built without requires_grad=True"
            logger.error(detail)
            raise ApplicationError(detail=detail, category=ErrorCategory.USAGE)


def gradient_check(
    fn: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    step: float = 1e-3,
) -> float:
    """
    Compare autodiff gradients of a scalar function with central finite differences.

    Args:
        fn (Callable[..., Tensor]): Builds a scalar tensor from ``inputs``.
        inputs (Sequence[Tensor]): Tensors perturbed one element at a time.
        step (float): Finite-difference step.

    Returns:
        float: The largest elementwise error |analytic - numeric| / max(1, |analytic|, |numeric|).

    Raises:
        ApplicationError: USAGE when an input does not require gradients.
    """
    _ensure_differentiable(inputs)
    for tensor in inputs:
        tensor.zero_grad()
    with Tape() as tape:
        loss = fn(*inputs)
    tape.backward(loss)
    # inputs the loss never reached keep grad None
    analytic = [
        np.zeros(t.data.size) if t.grad is None else np.asarray(t.grad, dtype=np.float64).reshape(-1)
        for t in inputs
    ]

    worst = 0.0
    for tensor, expected in zip(inputs, analytic):
        flat = tensor.data.reshape(-1)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + step
            upper = fn(*inputs).item()
            flat[k] = original - step
            lower = fn(*inputs).item()
            flat[k] = original
            numeric = (upper - lower) / (2 * step)
            scale = max(1.0, abs(numeric), abs(expected[k]))
            worst = max(worst, abs(numeric - expected[k]) / scale)
    return worst
