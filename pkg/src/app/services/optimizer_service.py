import logging
from dataclasses import dataclass, field

import numpy as np

from app.autograd import Tensor
from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.network.params import is_decay_exempt
from app.schemas.config import TrainConfig

logger = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    """
    Adaptive-moment accumulators keyed by parameter name.

    Attributes:
        first (dict[str, np.ndarray]): Exponential average of gradients.
        second (dict[str, np.ndarray]): Exponential average of squared gradients.
        step (int): Number of updates applied so far.
    """

    first: dict[str, np.ndarray] = field(default_factory=dict)
    second: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def optimizer_step(params: dict[str, Tensor], state: OptimizerState, cfg: TrainConfig) -> None:
    """
    Apply one bias-corrected adaptive-moment update with decoupled weight decay.

    θ ← θ - lr · (m̂ / (√v̂ + ε) + weight_decay · θ). Norm affines and the attention
    temperature are not decayed.

    Args:
        params (dict[str, Tensor]): Trainable tensors with populated gradients.
        state (OptimizerState): Updated in place.
        cfg (TrainConfig): Learning rate, decay and moment coefficients.

    Raises:
        ApplicationError: USAGE error if a gradient is missing.
    """
    missing = [name for name, tensor in params.items() if tensor.grad is None]
    if missing:
        logger.error(f"Optimizer step without gradients for {missing}")
        raise ApplicationError(
            detail=f"No gradient for {', '.join(missing)}; run a backward pass first",
            category=ErrorCategory.USAGE,
        )

    state.step += 1
    first_correction = 1 - cfg.beta1**state.step
    second_correction = 1 - cfg.beta2**state.step
    for name, tensor in params.items():
        grad = tensor.grad
        first = state.first.get(name, np.zeros_like(tensor.data))
        second = state.second.get(name, np.zeros_like(tensor.data))
        first = cfg.beta1 * first + (1 - cfg.beta1) * grad
        second = cfg.beta2 * second + (1 - cfg.beta2) * grad * grad
        state.first[name], state.second[name] = first, second

        update = (first / first_correction) / (np.sqrt(second / second_correction) + cfg.eps)
        decay = 0.0 if is_decay_exempt(name) else cfg.weight_decay
        tensor.data = (tensor.data - cfg.lr * (update + decay * tensor.data)).astype(tensor.dtype)
