import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.services.enums.split_tag import SplitTag


class Recording(BaseModel):
    """
    A preprocessed multichannel EEG trial with a per-sample attention label.

    Attributes:
        subject_id (str): Identifier of the listener.
        sample_rate (float): Sampling rate in Hz.
        data (np.ndarray): float32 matrix [C_raw, T_total].
        labels (np.ndarray): uint8 vector [T_total] of {0, 1}.
        recording_id (str): Identifier of the trial, unique within a dataset.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    subject_id: str
    sample_rate: float = Field(gt=0)
    data: np.ndarray
    labels: np.ndarray
    recording_id: str = ""

    @model_validator(mode="after")
    def check_shapes(self) -> "Recording":
        if self.data.ndim != 2:
            raise ApplicationError(
                detail=f"Recording data must be [channels, samples], got {self.data.shape}",
                category=ErrorCategory.DIMENSION,
            )
        if self.labels.shape != (self.data.shape[1],):
            raise ApplicationError(
                detail=f"Label track length {self.labels.shape} does not match {self.data.shape[1]} samples",
                category=ErrorCategory.DATA,
            )
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise ApplicationError(
                detail="Label track must only contain 0 and 1",
                category=ErrorCategory.DATA,
            )
        if not self.recording_id:
            self.recording_id = self.subject_id
        return self

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def samples(self) -> int:
        return self.data.shape[1]


class Window(BaseModel):
    """
    One decision window cut from a recording.

    Attributes:
        recording_id (str): The recording the window was cut from.
        subject_id (str): The listener.
        start (int): First sample index within the recording.
        data (np.ndarray): Raw-channel matrix [C_raw, T].
        label (int): The attended class, constant over the window.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    recording_id: str
    subject_id: str
    start: int = Field(ge=0)
    data: np.ndarray
    label: int = Field(ge=0, le=1)

    @property
    def stop(self) -> int:
        return self.start + self.data.shape[1]

    def overlaps(self, other: "Window") -> bool:
        return (
            self.recording_id == other.recording_id
            and self.start < other.stop
            and other.start < self.stop
        )


class WindowSet(BaseModel):
    """
    A labelled collection of equally shaped windows.

    Attributes:
        windows (list[Window]): The windows.
        window_seconds (float): Window duration.
        hop_seconds (float): Distance between consecutive window starts.
        split_tag (SplitTag): The partition the windows belong to.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    windows: list[Window]
    window_seconds: float = Field(gt=0)
    hop_seconds: float = Field(gt=0)
    split_tag: SplitTag = SplitTag.ALL

    @model_validator(mode="after")
    def check_uniform_shape(self) -> "WindowSet":
        shapes = {w.data.shape for w in self.windows}
        if len(shapes) > 1:
            raise ApplicationError(
                detail=f"Windows of one set must share [channels, samples], found {sorted(shapes)}",
                category=ErrorCategory.DIMENSION,
            )
        return self

    def __len__(self) -> int:
        return len(self.windows)

    @property
    def labels(self) -> np.ndarray:
        return np.array([w.label for w in self.windows], dtype=np.int64)

    def stack(self) -> np.ndarray:
        """
        Returns:
            np.ndarray: Window matrices stacked to [N, C_raw, T].
        """
        return np.stack([w.data for w in self.windows])
