import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.autograd import Tape, Tensor
from app.autograd.ops import cross_entropy
from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.network.params import ModelParams, count_params, init_params
from app.network.stc import model_forward
from app.schemas.config import TrainConfig
from app.schemas.csp import CSPModel
from app.schemas.recording import WindowSet
from app.schemas.report import METRICS_COLUMNS, EpochMetrics, TrainReport
from app.services.csp_service import fit_csp, project_windows
from app.services.enums.mode import Mode
from app.services.optimizer_service import OptimizerState, optimizer_step
from app.services.utils.validators import ensure_finite_loss, ensure_non_empty

logger = logging.getLogger(__name__)

EVAL_BATCH_SIZE = 256


@dataclass(frozen=True)
class ProjectedSet:
    """
    Network-ready windows: CSP-projected inputs [N, C, 1, T] and integer labels [N].
    """

    inputs: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_windows(cls, csp: CSPModel, windows: WindowSet) -> "ProjectedSet":
        return cls(inputs=project_windows(csp, windows), labels=windows.labels)


@dataclass
class EarlyStopping:
    """
    Patience rule on the validation loss: stop after ``patience`` consecutive epochs
    without a new strict minimum.
    """

    patience: int
    best_loss: float = math.inf
    best_epoch: int = 0
    stale_epochs: int = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """
        Record one epoch.

        Returns:
            bool: True when ``val_loss`` is a new minimum.
        """
        if val_loss < self.best_loss:
            self.best_loss, self.best_epoch, self.stale_epochs = val_loss, epoch, 0
            return True
        self.stale_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.stale_epochs >= self.patience


@dataclass
class TrainResult:
    report: TrainReport
    params: ModelParams
    csp: CSPModel


def _batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    # batch norm needs two examples, so a trailing singleton joins the previous batch
    batches = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def evaluate(
    params: ModelParams,
    dataset: ProjectedSet,
    mode: Mode = Mode.EVAL,
    batch_size: int = EVAL_BATCH_SIZE,
) -> tuple[float, float]:
    """
    Mean cross-entropy and accuracy over a dataset.

    Ties between logits resolve to the lower class index. Parameters and batch-norm
    statistics are left untouched.

    Args:
        params (ModelParams): The network.
        dataset (ProjectedSet): Non-empty inputs and labels.
        mode (Mode): Batch-norm behaviour.
        batch_size (int): Windows per forward pass.

    Returns:
        tuple[float, float]: loss and accuracy.
    """
    saved = {name: stats.copy() for name, stats in params.buffers().items()}
    total_loss, correct = 0.0, 0
    for start in range(0, len(dataset), batch_size):
        inputs = Tensor(dataset.inputs[start : start + batch_size])
        labels = dataset.labels[start : start + batch_size]
        logits = model_forward(inputs, params, mode=mode)
        total_loss += cross_entropy(logits, labels).item() * len(labels)
        correct += int(np.sum(np.argmax(logits.data, axis=1) == labels))
    if mode.training:
        for name, stats in params.buffers().items():
            stats.mean, stats.var = saved[name].mean, saved[name].var
    return total_loss / len(dataset), correct / len(dataset)


def _train_epoch(
    params: ModelParams,
    trainable: dict[str, Tensor],
    dataset: ProjectedSet,
    state: OptimizerState,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[float, float]:
    total_loss, correct = 0.0, 0
    for batch in _batches(rng.permutation(len(dataset)), cfg.batch_size):
        inputs, labels = Tensor(dataset.inputs[batch]), dataset.labels[batch]
        params.zero_grad()
        with Tape() as tape:
            logits = model_forward(inputs, params, mode=Mode.TRAIN)
            loss = cross_entropy(logits, labels)
        tape.backward(loss)
        optimizer_step(trainable, state, cfg)
        total_loss += loss.item() * len(batch)
        correct += int(np.sum(np.argmax(logits.data, axis=1) == labels))
    return total_loss / len(dataset), correct / len(dataset)


def train(
    train_set: WindowSet,
    val_set: WindowSet,
    test_set: WindowSet,
    cfg: TrainConfig,
    csp: CSPModel | None = None,
) -> TrainResult:
    """
    Fit CSP on the training windows, train the network with early stopping and
    report test accuracy of the best-validation parameters.

    Args:
        train_set (WindowSet): Training windows.
        val_set (WindowSet): Validation windows driving early stopping.
        test_set (WindowSet): Held-out windows.
        cfg (TrainConfig): Protocol and model settings.
        csp (CSPModel | None): Pre-fitted filters; fitted on ``train_set`` when None.

    Returns:
        TrainResult: Report, restored parameters and the CSP model.

    Raises:
        ApplicationError: DATA error for an empty split, NUMERICAL error naming the
            epoch when training diverges.
    """
    for name, window_set in (("train", train_set), ("validation", val_set), ("test", test_set)):
        ensure_non_empty(window_set, name)
    csp = csp or fit_csp(train_set, cfg.channels, cfg.csp_shrinkage)
    train_data, val_data, test_data = (
        ProjectedSet.from_windows(csp, s) for s in (train_set, val_set, test_set)
    )

    params = init_params(cfg.to_model_config(train_data.inputs.shape[-1]), cfg.seed, cfg.ablation)
    trainable = params.trainable()
    state = OptimizerState()
    rng = np.random.default_rng([cfg.seed, 1])
    stopper = EarlyStopping(cfg.patience)
    best_state = params.state_dict()
    epochs: list[EpochMetrics] = []

    for epoch in range(1, cfg.max_epochs + 1):
        try:
            train_loss, train_acc = _train_epoch(params, trainable, train_data, state, cfg, rng)
            val_loss, val_acc = evaluate(params, val_data)
        except ApplicationError as ex:
            if ex.data.category is not ErrorCategory.NUMERICAL:
                raise
            raise ApplicationError(
                detail=f"Training diverged at epoch {epoch}: {ex.data.detail}",
                category=ErrorCategory.NUMERICAL,
            ) from ex
        ensure_finite_loss(train_loss, epoch)
        ensure_finite_loss(val_loss, epoch)
        epochs.append(
            EpochMetrics(
                epoch=epoch,
                train_loss=train_loss,
                train_acc=train_acc,
                val_loss=val_loss,
                val_acc=val_acc,
            )
        )
        logger.info(
            f"Epoch {epoch}: train loss {train_loss:.4f} acc {train_acc:.4f}, "
            f"val loss {val_loss:.4f} acc {val_acc:.4f}"
        )
        if stopper.update(epoch, val_loss):
            best_state = params.state_dict()
        if stopper.should_stop:
            logger.info(
                f"Early stop at epoch {epoch}: no improvement for {cfg.patience} epochs, "
                f"best epoch {stopper.best_epoch}"
            )
            break

    params.load_state_dict(best_state)
    test_loss, test_accuracy = evaluate(params, test_data)
    report = TrainReport(
        epochs=epochs,
        stopped_epoch=len(epochs),
        best_epoch=stopper.best_epoch,
        best_val_loss=stopper.best_loss,
        test_loss=test_loss,
        test_accuracy=test_accuracy,
        param_count=count_params(params),
    )
    logger.info(f"Test accuracy {test_accuracy:.4f} with parameters of epoch {stopper.best_epoch}")
    return TrainResult(report=report, params=params, csp=csp)


def write_metrics(path: Path, epochs: list[EpochMetrics]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        writer.writerows(metrics.as_row() for metrics in epochs)


def write_report(path: Path, report: TrainReport) -> None:
    Path(path).write_text(report.model_dump_json(indent=2), encoding="utf-8")
