from pathlib import Path

import numpy as np

from app.schemas.config import ModelConfig
from app.schemas.recording import Recording, Window, WindowSet

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN_EEGR = FIXTURES / "golden_2x3.eegr"
GOLDEN_MHCK = FIXTURES / "golden_single.mhck"

VALID_SUBJECT_ID = "subject_01"
VALID_SUBJECT_ID_2 = "subject_02"
SAMPLE_RATE = 128.0

SMALL_CHANNELS = 8
SMALL_SAMPLES = 16
SMALL_TEMPORAL_FILTERS = 3
SMALL_BATCH = 2

DEFAULT_CHANNELS = 16
DEFAULT_TEMPORAL_FILTERS = 8

GRADIENT_TOLERANCE = 1e-4

SMALL_MODEL = ModelConfig(
    channels=SMALL_CHANNELS,
    samples=SMALL_SAMPLES,
    temporal_filters=SMALL_TEMPORAL_FILTERS,
)


def make_recording(
    labels: np.ndarray,
    channels: int = 4,
    subject_id: str = VALID_SUBJECT_ID,
    sample_rate: float = SAMPLE_RATE,
    seed: int = 0,
) -> Recording:
    rng = np.random.default_rng(seed)
    return Recording(
        subject_id=subject_id,
        sample_rate=sample_rate,
        data=rng.standard_normal((channels, len(labels))).astype(np.float32),
        labels=np.asarray(labels, dtype=np.uint8),
    )


def constant_recording(seconds: float, label: int = 0, channels: int = 4) -> Recording:
    samples = round(seconds * SAMPLE_RATE)
    return make_recording(np.full(samples, label), channels=channels)


def make_window_set(
    class_scales: tuple[np.ndarray, np.ndarray],
    per_class: int,
    samples: int = 64,
    seed: int = 0,
) -> WindowSet:
    """
    Gaussian windows whose channel standard deviations are ``class_scales[label]``.
    """
    rng = np.random.default_rng(seed)
    windows = []
    for label, scales in enumerate(class_scales):
        for i in range(per_class):
            data = np.asarray(scales)[:, None] * rng.standard_normal((len(scales), samples))
            windows.append(
                Window(
                    recording_id=f"rec{label}",
                    subject_id=VALID_SUBJECT_ID,
                    start=i * samples,
                    data=data,
                    label=label,
                )
            )
    return WindowSet(windows=windows, window_seconds=samples / SAMPLE_RATE, hop_seconds=samples / SAMPLE_RATE)


def sequential_windows(count: int, samples: int = 4, hop: int = 4, recording_id: str = "rec") -> WindowSet:
    windows = [
        Window(
            recording_id=recording_id,
            subject_id=VALID_SUBJECT_ID,
            start=i * hop,
            data=np.zeros((2, samples)),
            label=i % 2,
        )
        for i in range(count)
    ]
    return WindowSet(windows=windows, window_seconds=samples / SAMPLE_RATE, hop_seconds=hop / SAMPLE_RATE)
