import pytest

from app.schemas.config import RunConfig, SynthConfig
from app.services import checkpoint_service, experiment_service, synth_service

pytestmark = pytest.mark.integration

LEARNABLE = SynthConfig(subjects=2, c_raw=24, duration=600.0, class_gap=4.0, seed=0)


def _tiny_run(tmp_path, **overrides) -> RunConfig:
    synth_service.write_synthetic(SynthConfig(subjects=1, c_raw=8, duration=60.0, seed=2), tmp_path / "data")
    settings = {
        "data_dir": tmp_path / "data",
        "output_dir": tmp_path / "run",
        "window_seconds": 0.25,
        "channels": 8,
        "temporal_filters": 3,
        "max_epochs": 3,
        "patience": 2,
    }
    return RunConfig(**(settings | overrides))


def test_evaluateCheckpoint_reproducesTrainingAccuracy(tmp_path) -> None:
    # Arrange
    cfg = _tiny_run(tmp_path)

    # Act
    summary = experiment_service.run_training(cfg)
    result = experiment_service.evaluate_checkpoint(
        tmp_path / "run" / "subject_01" / checkpoint_service.FILE_NAME, tmp_path / "data"
    )

    # Assert
    assert summary.subjects == ["subject_01"]
    assert result.accuracy == summary.test_accuracies[0]
    for name in ("checkpoint.mhck", "csp.json", "metrics.csv", "report.json"):
        assert (tmp_path / "run" / "subject_01" / name).exists()


def test_runAblation_reportsSmallerNetworks_forEveryVariant(tmp_path) -> None:
    # Arrange
    cfg = _tiny_run(tmp_path, max_epochs=2, patience=1)

    # Act
    rows = experiment_service.run_ablation(cfg, ["ca", "mta", "mga", "mta+ca", "stc"])

    # Assert
    full, *variants = rows
    assert full.variant == "full"
    assert [row.variant for row in variants] == ["w/o ca", "w/o mta", "w/o mga", "w/o ca+mta", "w/o stc"]
    assert all(row.param_count < full.param_count for row in variants)


@pytest.fixture(scope="module")
def learnable_run(tmp_path_factory) -> RunConfig:
    root = tmp_path_factory.mktemp("learnable")
    synth_service.write_synthetic(LEARNABLE, root / "data")
    return RunConfig(data_dir=root / "data", output_dir=root / "run", max_epochs=50, patience=15)


def test_runTraining_learnsSyntheticAttention(learnable_run: RunConfig) -> None:
    # Act
    summary = experiment_service.run_training(learnable_run)

    # Assert
    assert summary.mean_accuracy >= 0.9
    assert summary.mean_accuracy >= summary.baseline_mean_accuracy
    assert summary.baseline_mean_accuracy > 0.85


def test_runAblation_keepsFullNetworkAhead(learnable_run: RunConfig) -> None:
    # Arrange
    cfg = learnable_run.model_copy(update={"output_dir": learnable_run.output_dir.parent / "ablation"})

    # Act
    full, *variants = experiment_service.run_ablation(cfg, ["ca", "mta", "mga", "mta+ca", "stc"])

    # Assert
    for row in variants:
        assert full.mean_accuracy >= row.mean_accuracy - 0.03, row.variant
