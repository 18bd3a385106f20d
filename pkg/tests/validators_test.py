import math

import numpy as np
import pytest

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.services.utils.validators import (
    ensure_both_classes,
    ensure_channel_match,
    ensure_finite_loss,
    ensure_non_empty,
    ensure_valid_components,
    ensure_valid_shrinkage,
)
from tests import test_data as td


def test_ensureNonEmpty_returnsSet_whenWindowsArePresent() -> None:
    # Arrange
    windows = td.sequential_windows(3)

    # Act
    result = ensure_non_empty(windows, "train")

    # Assert
    assert result is windows


def test_ensureNonEmpty_raisesDataError_whenSetIsEmpty() -> None:
    # Arrange
    empty = td.sequential_windows(0)

    # Act
    with pytest.raises(ApplicationError) as exc:
        ensure_non_empty(empty, "validation")

    # Assert
    assert exc.value.data.category is ErrorCategory.DATA
    assert exc.value.data.detail == "The validation split has no windows"
    assert exc.value.data.status == 3


def test_ensureBothClasses_raisesDataError_whenClassIsAbsent() -> None:
    # Act
    with pytest.raises(ApplicationError) as exc:
        ensure_both_classes(np.zeros(5, dtype=np.int64))

    # Assert
    assert exc.value.data.category is ErrorCategory.DATA
    assert "[1]" in exc.value.data.detail


def test_ensureBothClasses_passes_whenBothClassesOccur() -> None:
    # Act & Assert
    ensure_both_classes(np.array([0, 1, 1]))


@pytest.mark.parametrize(("c_out", "c_raw"), [(2, 2), (4, 24), (16, 16)])
def test_ensureValidComponents_passes_whenCountIsEvenAndFits(c_out: int, c_raw: int) -> None:
    # Act & Assert
    ensure_valid_components(c_out, c_raw)


@pytest.mark.parametrize(("c_out", "c_raw"), [(0, 4), (3, 4), (6, 4), (-2, 4)])
def test_ensureValidComponents_raisesConfigError_whenCountIsInvalid(c_out: int, c_raw: int) -> None:
    # Act
    with pytest.raises(ApplicationError) as exc:
        ensure_valid_components(c_out, c_raw)

    # Assert
    assert exc.value.data.category is ErrorCategory.CONFIG


@pytest.mark.parametrize("shrinkage", [-0.1, 1.0, 1.5])
def test_ensureValidShrinkage_raisesConfigError_whenOutsideUnitInterval(shrinkage: float) -> None:
    # Act
    with pytest.raises(ApplicationError) as exc:
        ensure_valid_shrinkage(shrinkage)

    # Assert
    assert exc.value.data.category is ErrorCategory.CONFIG


def test_ensureChannelMatch_raisesDimensionError_whenCountsDiffer() -> None:
    # Act
    with pytest.raises(ApplicationError) as exc:
        ensure_channel_match(3, 4, "recording subject_01")

    # Assert
    assert exc.value.data.category is ErrorCategory.DIMENSION
    assert exc.value.data.detail == "recording subject_01 has 3 channels, expected 4"


def test_ensureFiniteLoss_returnsLoss_whenFinite() -> None:
    # Act & Assert
    assert ensure_finite_loss(0.25, epoch=1) == 0.25


@pytest.mark.parametrize("loss", [math.nan, math.inf])
def test_ensureFiniteLoss_raisesNumericalError_namingEpoch(loss: float) -> None:
    # Act
    with pytest.raises(ApplicationError) as exc:
        ensure_finite_loss(loss, epoch=7)

    # Assert
    assert exc.value.data.category is ErrorCategory.NUMERICAL
    assert "epoch 7" in exc.value.data.detail
    assert exc.value.data.status == 4
