import numpy as np
import pytest

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.schemas.csp import CSPModel
from app.schemas.recording import Window, WindowSet
from app.services import csp_service
from tests import test_data as td

DISJOINT_SCALES = (np.array([5.0, 5.0, 1.0, 1.0]), np.array([1.0, 1.0, 5.0, 5.0]))


def _mixed_windows(per_class: int, seed: int) -> WindowSet:
    rng = np.random.default_rng(seed)
    mixing = (rng.standard_normal((3, 3)), rng.standard_normal((3, 3)))
    windows = [
        Window(
            recording_id="mixed",
            subject_id=td.VALID_SUBJECT_ID,
            start=i,
            data=mixing[label] @ rng.standard_normal((3, 32)),
            label=label,
        )
        for label in (0, 1)
        for i in range(per_class)
    ]
    return WindowSet(windows=windows, window_seconds=0.25, hop_seconds=0.25)


def _class_variance_ratio(model: CSPModel, windows: WindowSet, row: int) -> float:
    projected = csp_service.project_windows(model, windows)[:, row, 0, :].var(axis=1)
    labels = windows.labels
    v0, v1 = projected[labels == 0].mean(), projected[labels == 1].mean()
    return v0 / (v0 + v1)


def test_cspFromCovariances_alignsWithAxes_whenCovariancesAreDiagonal() -> None:
    # Act
    model = csp_service.csp_from_covariances(np.diag([4.0, 1.0]), np.diag([1.0, 4.0]), 2)

    # Assert
    np.testing.assert_allclose(sorted(model.eigenvalues), [0.2, 0.8], atol=1e-12)
    for row, ratio in zip(model.filters, model.eigenvalues):
        axis = 0 if ratio > 0.5 else 1
        assert row[axis] > 0
        assert abs(row[1 - axis]) < 1e-10


def test_fitCsp_separatesClasses_whenVarianceLivesInDisjointSubspaces() -> None:
    # Arrange
    train = td.make_window_set(DISJOINT_SCALES, per_class=100, seed=0)
    held_out = td.make_window_set(DISJOINT_SCALES, per_class=50, seed=1)

    # Act
    model = csp_service.fit_csp(train, c_out=2, shrinkage=0.05)

    # Assert
    ratio = _class_variance_ratio(model, held_out, row=0)
    assert max(ratio, 1 - ratio) >= 0.9


def test_fitCsp_returnsHalfRatios_whenClassesAreIdentical() -> None:
    # Arrange
    ones = np.ones(4)
    windows = td.make_window_set((ones, ones), per_class=200, seed=2)

    # Act
    model = csp_service.fit_csp(windows, c_out=4, shrinkage=0.05)

    # Assert
    np.testing.assert_allclose(model.eigenvalues, 0.5, atol=0.05)


def test_fitCsp_beatsRandomDirections_onThreeChannels() -> None:
    # Arrange
    windows = _mixed_windows(per_class=60, seed=3)
    directions = np.random.default_rng(4).standard_normal((10_000, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)

    # Act
    model = csp_service.fit_csp(windows, c_out=2, shrinkage=0.0)

    # Assert
    sigma_0, sigma_1 = model.class_covariances
    numerator = np.einsum("nc,cd,nd->n", directions, sigma_0, directions)
    denominator = np.einsum("nc,cd,nd->n", directions, sigma_0 + sigma_1, directions)
    ratios = numerator / denominator
    best_random = np.max(np.maximum(ratios, 1 - ratios))
    top = max(model.eigenvalues[0], 1 - model.eigenvalues[0])
    assert top >= best_random - 1e-3
    assert np.all(csp_service.eigen_residuals(model) < 1e-4)


def test_fitCsp_ordersEigenvaluesByDiscriminability() -> None:
    # Arrange
    windows = _mixed_windows(per_class=40, seed=5)

    # Act
    model = csp_service.fit_csp(windows, c_out=2, shrinkage=0.05)

    # Assert
    discriminability = np.maximum(model.eigenvalues, 1 - model.eigenvalues)
    assert np.all(np.diff(discriminability) <= 0)
    assert np.all((model.eigenvalues > 0) & (model.eigenvalues < 1))
    for row in model.filters:
        assert row[np.argmax(np.abs(row))] > 0


def test_fitCsp_isScaleInvariant() -> None:
    # Arrange
    windows = td.make_window_set(DISJOINT_SCALES, per_class=30, seed=6)
    scaled = windows.model_copy(
        update={"windows": [w.model_copy(update={"data": 7.0 * w.data}) for w in windows.windows]}
    )

    # Act
    base = csp_service.fit_csp(windows, c_out=4, shrinkage=0.05)
    rescaled = csp_service.fit_csp(scaled, c_out=4, shrinkage=0.05)

    # Assert
    np.testing.assert_allclose(rescaled.eigenvalues, base.eigenvalues, atol=1e-8)
    for row in range(4):
        assert _class_variance_ratio(rescaled, scaled, row) == pytest.approx(
            _class_variance_ratio(base, windows, row), abs=1e-5
        )


def test_fitCsp_raisesDataError_whenClassIsAbsent() -> None:
    # Arrange
    windows = td.make_window_set(DISJOINT_SCALES, per_class=5)
    single = windows.model_copy(update={"windows": [w for w in windows.windows if w.label == 0]})

    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        csp_service.fit_csp(single, c_out=2, shrinkage=0.05)
    assert exc_info.value.data.category is ErrorCategory.DATA


@pytest.mark.parametrize("c_out", [3, 6, 0])
def test_fitCsp_raisesConfigError_whenComponentCountIsInvalid(c_out: int) -> None:
    # Arrange
    windows = td.make_window_set(DISJOINT_SCALES, per_class=5)

    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        csp_service.fit_csp(windows, c_out=c_out, shrinkage=0.05)
    assert exc_info.value.data.category is ErrorCategory.CONFIG


def test_applyCsp_returnsInput_whenFiltersAreIdentity() -> None:
    # Arrange
    model = CSPModel(filters=np.eye(3), eigenvalues=np.full(3, 0.5))
    raw = np.random.default_rng(0).standard_normal((3, 10))

    # Act & Assert
    np.testing.assert_array_equal(csp_service.apply_csp(model, raw), raw)


def test_applyCsp_rejectsCommonMode_whenChannelsAreIdentical() -> None:
    # Arrange
    model = CSPModel(filters=np.array([[1.0, -1.0]]), eigenvalues=np.array([0.5]))
    channel = np.random.default_rng(0).standard_normal(10)

    # Act
    out = csp_service.apply_csp(model, np.stack([channel, channel]))

    # Assert
    np.testing.assert_array_equal(out, 0.0)


def test_applyCsp_matchesMatrixProduct_forRandomFilters() -> None:
    # Arrange
    rng = np.random.default_rng(1)
    filters, raw = rng.standard_normal((4, 6)), rng.standard_normal((6, 20))
    model = CSPModel(filters=filters, eigenvalues=np.full(4, 0.5))
    expected = np.array([[sum(filters[o, c] * raw[c, t] for c in range(6)) for t in range(20)] for o in range(4)])

    # Act & Assert
    np.testing.assert_allclose(csp_service.apply_csp(model, raw), expected, atol=1e-12)


def test_applyCsp_raisesDimensionError_whenChannelsDiffer() -> None:
    # Arrange
    model = CSPModel(filters=np.eye(3), eigenvalues=np.full(3, 0.5))

    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        csp_service.apply_csp(model, np.zeros((4, 10)))
    assert exc_info.value.data.category is ErrorCategory.DIMENSION


def test_loadCsp_restoresFilters_afterSaveCsp(tmp_path) -> None:
    # Arrange
    model = csp_service.fit_csp(td.make_window_set(DISJOINT_SCALES, per_class=10), 2, 0.05)
    path = tmp_path / "csp.json"

    # Act
    csp_service.save_csp(model, path)
    loaded = csp_service.load_csp(path)

    # Assert
    np.testing.assert_array_equal(loaded.filters, model.filters)
    np.testing.assert_array_equal(loaded.eigenvalues, model.eigenvalues)
    assert loaded.shrinkage == model.shrinkage


def test_loadCsp_raisesFormatError_whenDocumentIsMalformed(tmp_path) -> None:
    # Arrange
    path = tmp_path / "csp.json"
    path.write_text('{"c_raw": 2}', encoding="utf-8")

    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        csp_service.load_csp(path)
    assert exc_info.value.data.category is ErrorCategory.FORMAT
