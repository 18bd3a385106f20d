import numpy as np
import pytest

from app.autograd import Tensor, shadow_precision
from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.schemas.config import TrainConfig
from app.services.optimizer_service import OptimizerState, optimizer_step

NO_DECAY = TrainConfig(lr=0.01, weight_decay=0.0)


def _with_grad(data, grad) -> Tensor:
    tensor = Tensor(data, requires_grad=True)
    tensor.grad = np.asarray(grad, dtype=tensor.dtype)
    return tensor


def test_optimizerStep_movesByLearningRate_onFirstStep() -> None:
    # Arrange
    weight = _with_grad(np.zeros(3), [2.0, -0.5, 3.0])

    # Act
    optimizer_step({"fc.weight": weight}, OptimizerState(), NO_DECAY)

    # Assert
    np.testing.assert_allclose(weight.data, [-0.01, 0.01, -0.01], rtol=1e-5)


def test_optimizerStep_leavesWeights_whenGradientIsZeroWithoutDecay() -> None:
    # Arrange
    weight = _with_grad([1.5, -2.0], np.zeros(2))

    # Act
    optimizer_step({"fc.weight": weight}, OptimizerState(), NO_DECAY)

    # Assert
    np.testing.assert_array_equal(weight.data, [1.5, -2.0])


def test_optimizerStep_shrinksWeights_whenGradientIsZeroWithDecay() -> None:
    # Arrange
    cfg = TrainConfig(lr=0.01, weight_decay=0.5)
    weight = _with_grad([1.5, -2.0], np.zeros(2))
    temperature = _with_grad([0.3], np.zeros(1))

    # Act
    optimizer_step({"fc.weight": weight, "mha.log_t": temperature}, OptimizerState(), cfg)

    # Assert
    np.testing.assert_allclose(weight.data, np.array([1.5, -2.0]) * (1 - 0.01 * 0.5), rtol=1e-6)
    np.testing.assert_array_equal(temperature.data, np.float32(0.3))


def test_optimizerStep_raisesUsageError_whenGradientIsMissing() -> None:
    # Arrange
    weight = Tensor(np.zeros(2), requires_grad=True)

    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        optimizer_step({"fc.weight": weight}, OptimizerState(), NO_DECAY)
    assert exc_info.value.data.category is ErrorCategory.USAGE
    assert "fc.weight" in exc_info.value.data.detail


def test_optimizerStep_matchesReferenceTrajectory_onQuadratic() -> None:
    # Arrange
    cfg = TrainConfig(lr=0.05, weight_decay=1e-2)
    curvature = np.array([1.0, 4.0, 0.25])
    expected = np.array([1.0, -1.0, 2.0])
    m, v = np.zeros(3), np.zeros(3)
    with shadow_precision():
        weight = Tensor(expected.copy(), requires_grad=True)
    state = OptimizerState()

    # Act
    for step in range(1, 51):
        weight.grad = curvature * weight.data
        optimizer_step({"fc.weight": weight}, state, cfg)

        grad = curvature * expected
        m = cfg.beta1 * m + (1 - cfg.beta1) * grad
        v = cfg.beta2 * v + (1 - cfg.beta2) * grad * grad
        m_hat, v_hat = m / (1 - cfg.beta1**step), v / (1 - cfg.beta2**step)
        expected = expected - cfg.lr * (m_hat / (np.sqrt(v_hat) + cfg.eps) + cfg.weight_decay * expected)

    # Assert
    assert state.step == 50
    np.testing.assert_allclose(weight.data, expected, atol=1e-6)
