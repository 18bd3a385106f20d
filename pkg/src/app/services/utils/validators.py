import logging
import math

import numpy as np

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.schemas.recording import WindowSet

logger = logging.getLogger(__name__)


def ensure_non_empty(window_set: WindowSet, name: str) -> WindowSet:
    """
    Ensure that a window set holds at least one window.

    Args:
        window_set (WindowSet): The set to check.
        name (str): Name of the split, used in the diagnostic.

    Returns:
        WindowSet: The unchanged set.

    Raises:
        ApplicationError: If the set is empty.
    """
    if len(window_set) == 0:
        logger.error(f"The {name} split has no windows")
        raise ApplicationError(
            detail=f"The {name} split has no windows",
            category=ErrorCategory.DATA,
        )
    return window_set


def ensure_both_classes(labels: np.ndarray, name: str = "training") -> None:
    """
    Ensure that both attention classes occur in ``labels``.

    Raises:
        ApplicationError: If a class is absent.
    """
    present = set(np.unique(labels).tolist())
    missing = {0, 1} - present
    if missing:
        logger.error(f"Class {sorted(missing)} absent from the {name} windows")
        raise ApplicationError(
            detail=f"Class {sorted(missing)} is absent from the {name} windows",
            category=ErrorCategory.DATA,
        )


def ensure_valid_components(c_out: int, c_raw: int) -> None:
    """
    Ensure that ``c_out`` CSP components can be drawn from ``c_raw`` channels in pairs.

    Raises:
        ApplicationError: If ``c_out`` is odd, non-positive or exceeds ``c_raw``.
    """
    if c_out < 2 or c_out % 2 or c_out > c_raw:
        logger.error(f"Cannot extract {c_out} CSP components from {c_raw} channels")
        raise ApplicationError(
            detail=f"CSP components must be an even number in [2, {c_raw}], got {c_out}",
            category=ErrorCategory.CONFIG,
        )


def ensure_valid_shrinkage(shrinkage: float) -> None:
    if not 0 <= shrinkage < 1:
        logger.error(f"Shrinkage {shrinkage} outside [0, 1)")
        raise ApplicationError(
            detail=f"Shrinkage must lie in [0, 1), got {shrinkage}",
            category=ErrorCategory.CONFIG,
        )


def ensure_channel_match(actual: int, expected: int, what: str) -> None:
    """
    Ensure that ``what`` carries ``expected`` channels.

    Raises:
        ApplicationError: On a mismatch.
    """
    if actual != expected:
        logger.error(f"{what} has {actual} channels, expected {expected}")
        raise ApplicationError(
            detail=f"{what} has {actual} channels, expected {expected}",
            category=ErrorCategory.DIMENSION,
        )


def ensure_finite_loss(loss: float, epoch: int) -> float:
    """
    Ensure that a training loss is finite.

    Raises:
        ApplicationError: If training diverged during ``epoch``.
    """
    if not math.isfinite(loss):
        logger.error(f"Training diverged at epoch {epoch}: loss {loss}")
        raise ApplicationError(
            detail=f"Training diverged at epoch {epoch}: loss is {loss}",
            category=ErrorCategory.NUMERICAL,
        )
    return loss
