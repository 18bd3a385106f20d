import logging
from pathlib import Path

import numpy as np
from scipy import signal

from app.schemas.config import SynthConfig
from app.schemas.recording import Recording
from app.services.recording_service import SUFFIX, save_recording

logger = logging.getLogger(__name__)

# Source pass-bands as fractions of the sample rate, one per class.
CLASS_BANDS = ((0.06, 0.1), (0.03, 0.06))


def _band_limited(rng: np.random.Generator, band: tuple[float, float], shape: tuple[int, int]) -> np.ndarray:
    sos = signal.butter(4, [2 * band[0], 2 * band[1]], btype="bandpass", output="sos")
    sources = signal.sosfiltfilt(sos, rng.standard_normal(shape), axis=1)
    return sources / sources.std(axis=1, keepdims=True)


def _subject_recording(cfg: SynthConfig, subject: int, rng: np.random.Generator) -> Recording:
    samples = round(cfg.duration * cfg.sample_rate)
    segment = max(1, round(cfg.segment_seconds * cfg.sample_rate))
    labels = ((np.arange(samples) // segment) % 2).astype(np.uint8)

    basis, _ = np.linalg.qr(rng.standard_normal((cfg.c_raw, cfg.c_raw)))
    width = max(1, cfg.c_raw // 4)
    subspaces = (basis[:, :width], basis[:, width : 2 * width])

    data = rng.standard_normal((cfg.c_raw, samples))
    for label, (subspace, band) in enumerate(zip(subspaces, CLASS_BANDS)):
        sources = np.sqrt(cfg.class_gap) * _band_limited(rng, band, (width, samples))
        data += (subspace @ sources) * (labels == label)

    subject_id = f"subject_{subject + 1:02d}"
    return Recording(
        subject_id=subject_id,
        sample_rate=cfg.sample_rate,
        data=data.astype(np.float32),
        labels=labels,
        recording_id=subject_id,
    )


def synth_generate(cfg: SynthConfig) -> list[Recording]:
    """
    Generate one two-class recording per subject.

    Class 0 drives band-limited sources into one random channel subspace, class 1
    into a disjoint one in a lower band; unit white noise covers every channel.
    Attention alternates every ``segment_seconds`` starting with class 0.

    Args:
        cfg (SynthConfig): Generator settings.

    Returns:
        list[Recording]: Identical for identical settings.
    """
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.subjects)
    recordings = [
        _subject_recording(cfg, subject, np.random.default_rng(stream))
        for subject, stream in enumerate(streams)
    ]
    logger.info(
        f"Generated {cfg.subjects} synthetic recordings of {cfg.duration} s, "
        f"{cfg.c_raw} channels, class gap {cfg.class_gap}"
    )
    return recordings


def write_synthetic(cfg: SynthConfig, out_dir: Path) -> list[Path]:
    paths = []
    for recording in synth_generate(cfg):
        path = Path(out_dir) / f"{recording.subject_id}{SUFFIX}"
        save_recording(recording, path)
        paths.append(path)
    return paths
