from typing import Literal

from pydantic import BaseModel, Field

# Column order of the per-epoch metrics CSV.
METRICS_COLUMNS = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")


class EpochMetrics(BaseModel):
    epoch: int = Field(ge=1)
    train_loss: float
    train_acc: float = Field(ge=0, le=1)
    val_loss: float
    val_acc: float = Field(ge=0, le=1)

    def as_row(self) -> list[float | int]:
        return [getattr(self, column) for column in METRICS_COLUMNS]


class TrainReport(BaseModel):
    """
    Outcome of one training run.

    Attributes:
        epochs (list[EpochMetrics]): Per-epoch losses and accuracies.
        stopped_epoch (int): The last epoch that ran.
        best_epoch (int): The epoch whose parameters were restored.
        best_val_loss (float): Validation loss at ``best_epoch``.
        test_loss (float): Test loss with the restored parameters.
        test_accuracy (float): Test accuracy with the restored parameters.
        param_count (int): Trainable scalars under the run's ablation mask.
        subject_id (str | None): The listener the model was trained for.
        baseline_accuracy (float | None): CSP+LDA test accuracy on the same split.
    """

    epochs: list[EpochMetrics] = []
    stopped_epoch: int = Field(ge=0)
    best_epoch: int = Field(ge=0)
    best_val_loss: float
    test_loss: float
    test_accuracy: float = Field(ge=0, le=1)
    param_count: int = Field(ge=0)
    subject_id: str | None = None
    baseline_accuracy: float | None = Field(default=None, ge=0, le=1)


class RunSummary(BaseModel):
    """
    Test accuracy aggregated over per-subject models.
    """

    variant: str = "full"
    subjects: list[str]
    test_accuracies: list[float]
    mean_accuracy: float
    sd_accuracy: float
    sd_over: Literal["subjects"] = "subjects"
    param_count: int
    baseline_mean_accuracy: float | None = None


class AblationRow(BaseModel):
    variant: str
    mean_accuracy: float
    sd_accuracy: float
    param_count: int

    def as_row(self) -> list[str | float | int]:
        return [self.variant, self.mean_accuracy, self.sd_accuracy, self.param_count]


class ParamReport(BaseModel):
    """
    Trainable-parameter count of one configuration next to the reference budget.
    """

    param_count: int
    reference: str
    variant: str
    block_sizes: dict[str, int]


class EvalResult(BaseModel):
    subject_id: str
    loss: float
    accuracy: float = Field(ge=0, le=1)
    windows: int = Field(ge=0)
