import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from app.core.config import get_settings
from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.network.params import block_sizes, count_params, init_params
from app.schemas.config import REFERENCE_PARAM_BUDGET, AblationFlags, RunConfig
from app.schemas.recording import Recording
from app.schemas.report import AblationRow, EvalResult, ParamReport, RunSummary, TrainReport
from app.services import checkpoint_service, csp_service, recording_service, training_service
from app.services.baseline_service import baseline_accuracy
from app.services.data_service import group_by_subject, prepare_splits
from app.services.training_service import ProjectedSet, evaluate

logger = logging.getLogger(__name__)

EFFECTIVE_CONFIG = "effective_config.json"
SUMMARY = "summary.json"
ABLATION_TABLE = "ablation.csv"
ABLATION_COLUMNS = ("variant", "mean_accuracy", "sd_accuracy", "param_count")


def load_config(path: Path) -> RunConfig:
    return RunConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))


def _load_subjects(cfg: RunConfig) -> dict[str, list[Recording]]:
    if cfg.data_dir is None:
        raise ApplicationError(
            detail="The run configuration names no data_dir",
            category=ErrorCategory.CONFIG,
        )
    grouped = group_by_subject(recording_service.load_directory(cfg.data_dir))
    if cfg.subjects is None:
        return grouped
    unknown = sorted(set(cfg.subjects) - set(grouped))
    if unknown:
        raise ApplicationError(
            detail=f"Subjects {unknown} have no recordings in {cfg.data_dir}",
            category=ErrorCategory.DATA,
        )
    return {subject: grouped[subject] for subject in cfg.subjects}


def _resolve(cfg: RunConfig, subjects: dict[str, list[Recording]]) -> RunConfig:
    rates = {rec.sample_rate for recordings in subjects.values() for rec in recordings}
    if len(rates) != 1:
        raise ApplicationError(
            detail=f"Recordings must share one sample rate, found {sorted(rates)}",
            category=ErrorCategory.DATA,
        )
    return cfg.resolved(rates.pop())


def train_subject(
    recordings: list[Recording], cfg: RunConfig, ablation: AblationFlags | None = None
) -> training_service.TrainResult:
    """
    Train one subject's model and attach the CSP+LDA baseline accuracy to its report.
    """
    train_set, val_set, test_set = prepare_splits(recordings, cfg)
    result = training_service.train(train_set, val_set, test_set, cfg.to_train_config(ablation))
    result.report.subject_id = recordings[0].subject_id
    result.report.baseline_accuracy = baseline_accuracy(result.csp, train_set, test_set)
    return result


def _summarize(variant: str, reports: list[TrainReport]) -> RunSummary:
    accuracies = [report.test_accuracy for report in reports]
    baselines = [r.baseline_accuracy for r in reports if r.baseline_accuracy is not None]
    return RunSummary(
        variant=variant,
        subjects=[report.subject_id for report in reports],
        test_accuracies=accuracies,
        mean_accuracy=float(np.mean(accuracies)),
        sd_accuracy=float(np.std(accuracies, ddof=1)) if len(accuracies) > 1 else 0.0,
        param_count=reports[0].param_count,
        baseline_mean_accuracy=float(np.mean(baselines)) if baselines else None,
    )


def _write_subject(directory: Path, result: training_service.TrainResult) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    checkpoint_service.save_checkpoint(directory / checkpoint_service.FILE_NAME, result.params, result.csp)
    csp_service.save_csp(result.csp, directory / "csp.json")
    training_service.write_metrics(directory / "metrics.csv", result.report.epochs)
    training_service.write_report(directory / "report.json", result.report)


def run_training(cfg: RunConfig) -> RunSummary:
    """
    Train one model per subject and write checkpoints, metrics, reports, the
    effective configuration and the cross-subject summary.

    Args:
        cfg (RunConfig): The run configuration.

    Returns:
        RunSummary: Mean and SD of test accuracy over subjects.
    """
    subjects = _load_subjects(cfg)
    cfg = _resolve(cfg, subjects)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / EFFECTIVE_CONFIG).write_text(cfg.model_dump_json(indent=2), encoding="utf-8")

    reports = []
    for subject, recordings in subjects.items():
        logger.info(f"Training subject {subject}")
        result = train_subject(recordings, cfg)
        _write_subject(cfg.output_dir / subject, result)
        reports.append(result.report)

    summary = _summarize(cfg.ablation_flags().label, reports)
    (cfg.output_dir / SUMMARY).write_text(summary.model_dump_json(indent=2), encoding="utf-8")
    logger.info(
        f"Mean test accuracy {summary.mean_accuracy:.4f} ± {summary.sd_accuracy:.4f} "
        f"over {len(reports)} subjects"
    )
    return summary


def evaluate_checkpoint(
    checkpoint: Path, data_dir: Path, config_path: Path | None = None
) -> EvalResult:
    """
    Re-derive a subject's test split and score the stored model on it.

    The subject is the checkpoint's directory name; the configuration defaults to
    the run's effective configuration one level up.
    """
    checkpoint = Path(checkpoint)
    subject = checkpoint.parent.name
    cfg = load_config(config_path or checkpoint.parent.parent / EFFECTIVE_CONFIG)
    cfg = cfg.model_copy(update={"data_dir": Path(data_dir), "subjects": [subject]})
    subjects = _load_subjects(cfg)
    cfg = _resolve(cfg, subjects)
    _, _, test_set = prepare_splits(subjects[subject], cfg)

    state = checkpoint_service.load_checkpoint(checkpoint)
    csp_path = checkpoint.parent / "csp.json"
    csp = (
        csp_service.load_csp(csp_path)
        if csp_path.exists()
        else checkpoint_service.csp_from_checkpoint(state, cfg.csp_shrinkage)
    )
    params = init_params(cfg.to_model_config_for(cfg.samples), cfg.seed, cfg.ablation_flags())
    params.load_state_dict(state)
    loss, accuracy = evaluate(params, ProjectedSet.from_windows(csp, test_set))
    logger.info(f"Subject {subject}: test loss {loss:.4f}, accuracy {accuracy:.4f}")
    return EvalResult(subject_id=subject, loss=loss, accuracy=accuracy, windows=len(test_set))


def _run_variant(
    variant: str, subjects: dict[str, list[Recording]], cfg: RunConfig
) -> AblationRow:
    flags = AblationFlags.from_variant(variant)
    reports = [train_subject(recordings, cfg, flags).report for recordings in subjects.values()]
    summary = _summarize(flags.label, reports)
    return AblationRow(
        variant=flags.label,
        mean_accuracy=summary.mean_accuracy,
        sd_accuracy=summary.sd_accuracy,
        param_count=summary.param_count,
    )


def run_ablation(cfg: RunConfig, variants: list[str]) -> list[AblationRow]:
    """
    Train the full network and every ablated variant on the same splits and write
    the comparison table.

    Variants run in up to ``MHANET_THREADS`` worker processes.

    Args:
        cfg (RunConfig): Shared configuration; its own ablation list is ignored.
        variants (list[str]): Variants such as ``"mta+ca"``.

    Returns:
        list[AblationRow]: The full network first, then the variants in order.
    """
    subjects = _load_subjects(cfg)
    cfg = _resolve(cfg, subjects).model_copy(update={"ablation": []})
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / EFFECTIVE_CONFIG).write_text(cfg.model_dump_json(indent=2), encoding="utf-8")
    # a typo in any variant fails before training starts
    for variant in variants:
        AblationFlags.from_variant(variant)
    labels = ["full", *variants]

    workers = min(get_settings().MHANET_THREADS, len(labels))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_variant, labels, [subjects] * len(labels), [cfg] * len(labels)))
    else:
        rows = [_run_variant(label, subjects, cfg) for label in labels]

    with (cfg.output_dir / ABLATION_TABLE).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(ABLATION_COLUMNS)
        writer.writerows(row.as_row() for row in rows)
    return rows


def parameter_report(cfg: RunConfig) -> ParamReport:
    """
    Trainable-parameter count of a configuration without touching any data.
    """
    resolved = cfg.resolved()
    model_config = resolved.to_model_config_for(resolved.samples)
    flags = resolved.ablation_flags()
    count = count_params(init_params(model_config, resolved.seed, flags))
    return ParamReport(
        param_count=count,
        reference=REFERENCE_PARAM_BUDGET,
        variant=flags.label,
        block_sizes=block_sizes(model_config),
    )
