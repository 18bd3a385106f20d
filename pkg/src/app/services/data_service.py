import logging
from collections import defaultdict
from itertools import chain

import numpy as np

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.schemas.config import RunConfig
from app.schemas.recording import Recording, Window, WindowSet
from app.services.enums.split_tag import SplitTag

logger = logging.getLogger(__name__)

MIN_SPLIT_WINDOWS = 10


def _samples(seconds: float, sample_rate: float, what: str) -> int:
    count = round(seconds * sample_rate)
    if count < 1:
        logger.error(f"{what} of {seconds} s is shorter than one sample at {sample_rate} Hz")
        raise ApplicationError(
            detail=f"{what} of {seconds} s is shorter than one sample at {sample_rate} Hz",
            category=ErrorCategory.CONFIG,
        )
    return count


def window_dataset(rec: Recording, window_seconds: float, hop_seconds: float) -> list[Window]:
    """
    Slice a recording into decision windows starting at multiples of the hop.

    Windows whose label track is not constant are dropped.

    Args:
        rec (Recording): The source recording.
        window_seconds (float): Window duration.
        hop_seconds (float): Distance between window starts.

    Returns:
        list[Window]: Windows in time order.

    Raises:
        ApplicationError: DATA error if the window is longer than the recording.
    """
    length = _samples(window_seconds, rec.sample_rate, "Window")
    hop = _samples(hop_seconds, rec.sample_rate, "Hop")
    if length > rec.samples:
        logger.error(f"Window of {length} samples exceeds recording {rec.recording_id}")
        raise ApplicationError(
            detail=f"A {length}-sample window does not fit recording {rec.recording_id} "
            f"of {rec.samples} samples",
            category=ErrorCategory.DATA,
        )
    windows = []
    for start in range(0, rec.samples - length + 1, hop):
        labels = rec.labels[start : start + length]
        if labels.min() != labels.max():
            continue
        windows.append(
            Window(
                recording_id=rec.recording_id,
                subject_id=rec.subject_id,
                start=start,
                data=rec.data[:, start : start + length],
                label=int(labels[0]),
            )
        )
    return windows


def _purge(block: list[Window], later: list[Window]) -> list[Window]:
    # later blocks start no earlier than any window of ``block``
    if not later:
        return block
    boundary = min(w.start for w in later)
    return [w for w in block if w.stop <= boundary]


def _split_recording(
    windows: list[Window], ratios: tuple[int, int, int]
) -> tuple[list[Window], list[Window], list[Window]]:
    ordered = sorted(windows, key=lambda w: w.start)
    total = sum(ratios)
    n_val = len(ordered) * ratios[1] // total
    n_test = len(ordered) * ratios[2] // total
    n_train = len(ordered) - n_val - n_test
    train = ordered[:n_train]
    val = ordered[n_train : n_train + n_val]
    test = ordered[n_train + n_val :]
    return _purge(train, val + test), _purge(val, test), test


def split_dataset(
    windows: WindowSet,
    ratios: tuple[int, int, int] = (8, 1, 1),
    seed: int = 0,
) -> tuple[WindowSet, WindowSet, WindowSet]:
    """
    Split windows train | val | test into contiguous time blocks of every recording.

    The remainder of each recording goes to train. Train windows sharing a sample
    with a val or test window, and val windows sharing one with a test window, are
    dropped. The seed only shuffles the order within each split.

    Args:
        windows (WindowSet): Windows of one or more recordings.
        ratios (tuple[int, int, int]): Relative split sizes.
        seed (int): Shuffle seed.

    Returns:
        tuple[WindowSet, WindowSet, WindowSet]: train, val and test.

    Raises:
        ApplicationError: DATA error with fewer than ten windows.
    """
    if len(windows) < MIN_SPLIT_WINDOWS:
        logger.error(f"Only {len(windows)} windows to split")
        raise ApplicationError(
            detail=f"Splitting needs at least {MIN_SPLIT_WINDOWS} windows, got {len(windows)}",
            category=ErrorCategory.DATA,
        )
    if any(r < 0 for r in ratios) or sum(ratios) == 0:
        raise ApplicationError(
            detail=f"Split ratios must be non-negative with a positive sum, got {ratios}",
            category=ErrorCategory.CONFIG,
        )

    by_recording: dict[str, list[Window]] = defaultdict(list)
    for window in windows.windows:
        by_recording[window.recording_id].append(window)
    parts = [_split_recording(group, ratios) for group in by_recording.values()]

    rng = np.random.default_rng(seed)
    result = []
    for index, tag in enumerate((SplitTag.TRAIN, SplitTag.VAL, SplitTag.TEST)):
        members = list(chain.from_iterable(part[index] for part in parts))
        members = [members[i] for i in rng.permutation(len(members))]
        result.append(
            WindowSet(
                windows=members,
                window_seconds=windows.window_seconds,
                hop_seconds=windows.hop_seconds,
                split_tag=tag,
            )
        )
    train, val, test = result
    logger.info(f"Split {len(windows)} windows into {len(train)}/{len(val)}/{len(test)}")
    return train, val, test


def thin_windows(window_set: WindowSet, hop_seconds: float, sample_rate: float) -> WindowSet:
    """
    Keep, per recording in time order, windows starting at least one hop after the
    previously kept one.
    """
    hop = _samples(hop_seconds, sample_rate, "Hop")
    kept = []
    last_start: dict[str, int] = {}
    for window in sorted(window_set.windows, key=lambda w: (w.recording_id, w.start)):
        previous = last_start.get(window.recording_id)
        if previous is None or window.start - previous >= hop:
            kept.append(window)
            last_start[window.recording_id] = window.start
    return window_set.model_copy(update={"windows": kept, "hop_seconds": hop_seconds})


def prepare_splits(
    recordings: list[Recording], cfg: RunConfig
) -> tuple[WindowSet, WindowSet, WindowSet]:
    """
    Window recordings at the train hop, split them leakage-free and thin val and test
    to the evaluation hop.

    Args:
        recordings (list[Recording]): Recordings sharing one sample rate.
        cfg (RunConfig): Window, hop, ratio and seed settings.

    Returns:
        tuple[WindowSet, WindowSet, WindowSet]: train, val and test.
    """
    rates = {rec.sample_rate for rec in recordings}
    if len(rates) != 1:
        raise ApplicationError(
            detail=f"Recordings must share one sample rate, found {sorted(rates)}",
            category=ErrorCategory.DATA,
        )
    sample_rate = rates.pop()
    cfg = cfg.resolved(sample_rate)
    windows = list(
        chain.from_iterable(
            window_dataset(rec, cfg.window_seconds, cfg.train_hop_seconds) for rec in recordings
        )
    )
    everything = WindowSet(
        windows=windows,
        window_seconds=cfg.window_seconds,
        hop_seconds=cfg.train_hop_seconds,
    )
    train, val, test = split_dataset(everything, cfg.split_ratios, cfg.seed)
    val = thin_windows(val, cfg.eval_hop_seconds, sample_rate)
    test = thin_windows(test, cfg.eval_hop_seconds, sample_rate)
    return train, val, test


def group_by_subject(recordings: list[Recording]) -> dict[str, list[Recording]]:
    grouped: dict[str, list[Recording]] = {}
    for rec in recordings:
        grouped.setdefault(rec.subject_id, []).append(rec)
    return grouped
