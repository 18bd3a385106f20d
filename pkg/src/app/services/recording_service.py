"""
EEGR v1 recording files.

Little-endian layout: magic ``EEGR``, u32 version, u32 channels, u64 samples,
f32 sample rate, u8 subject-id length, UTF-8 subject id, channels x samples f32
row-major, then one {0, 1} byte per sample.
"""

import logging
import struct
from pathlib import Path

import numpy as np

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.schemas.recording import Recording

logger = logging.getLogger(__name__)

MAGIC = b"EEGR"
VERSION = 1
SUFFIX = ".eegr"

_HEADER = struct.Struct("<4sIIQf")
_MAX_PAYLOAD_BYTES = 1 << 40


def _format_error(path: Path, offset: int, detail: str) -> ApplicationError:
    message = f"{path}: byte {offset}: {detail}"
    logger.error(message)
    return ApplicationError(detail=message, category=ErrorCategory.FORMAT)


def _require(path: Path, buffer: bytes, offset: int, size: int, what: str) -> None:
    if len(buffer) < offset + size:
        raise _format_error(
            path,
            offset,
            f"truncated {what}: expected {offset + size} bytes, file has {len(buffer)}",
        )


def decode_recording(buffer: bytes, path: Path = Path("<memory>")) -> Recording:
    """
    Parse an EEGR v1 byte string.

    Args:
        buffer (bytes): The file content.
        path (Path): Source path for diagnostics.

    Returns:
        Recording: The decoded recording.

    Raises:
        ApplicationError: FORMAT error naming the byte offset of the first defect.
    """
    _require(path, buffer, 0, _HEADER.size, "header")
    magic, version, channels, samples, sample_rate = _HEADER.unpack_from(buffer, 0)
    if magic != MAGIC:
        raise _format_error(path, 0, f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise _format_error(path, 4, f"unsupported version {version}")
    if channels == 0 or channels * samples * 4 > _MAX_PAYLOAD_BYTES:
        raise _format_error(path, 8, f"dimension overflow: {channels} x {samples}")
    if not sample_rate > 0:
        raise _format_error(path, 20, f"sample rate must be positive, got {sample_rate}")

    offset = _HEADER.size
    _require(path, buffer, offset, 1, "subject id length")
    id_length = buffer[offset]
    offset += 1
    _require(path, buffer, offset, id_length, "subject id")
    try:
        subject_id = buffer[offset : offset + id_length].decode("utf-8")
    except UnicodeDecodeError as ex:
        raise _format_error(path, offset, "subject id is not valid UTF-8") from ex
    offset += id_length

    payload = channels * samples * 4
    _require(path, buffer, offset, payload + samples, "payload")
    data = np.frombuffer(buffer, dtype="<f4", count=channels * samples, offset=offset)
    offset += payload
    labels = np.frombuffer(buffer, dtype=np.uint8, count=samples, offset=offset)
    offset += samples
    if len(buffer) != offset:
        raise _format_error(path, offset, f"{len(buffer) - offset} trailing bytes")
    if samples and labels.max() > 1:
        bad = int(np.argmax(labels > 1))
        raise _format_error(path, offset - samples + bad, f"label byte {labels[bad]} is not 0 or 1")

    return Recording(
        subject_id=subject_id,
        sample_rate=float(sample_rate),
        data=data.reshape(channels, samples).astype(np.float32),
        labels=labels.copy(),
        recording_id=path.stem if path.suffix == SUFFIX else subject_id,
    )


def encode_recording(rec: Recording) -> bytes:
    subject = rec.subject_id.encode("utf-8")
    if len(subject) > 255:
        raise ApplicationError(
            detail=f"Subject id {rec.subject_id!r} exceeds 255 UTF-8 bytes",
            category=ErrorCategory.FORMAT,
        )
    header = _HEADER.pack(MAGIC, VERSION, rec.channels, rec.samples, rec.sample_rate)
    return b"".join(
        (
            header,
            bytes([len(subject)]),
            subject,
            np.ascontiguousarray(rec.data, dtype="<f4").tobytes(),
            np.ascontiguousarray(rec.labels, dtype=np.uint8).tobytes(),
        )
    )


def load_recording(path: Path) -> Recording:
    recording = decode_recording(Path(path).read_bytes(), Path(path))
    logger.info(
        f"Loaded {path}: subject {recording.subject_id}, "
        f"{recording.channels} channels x {recording.samples} samples"
    )
    return recording


def save_recording(rec: Recording, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_recording(rec))
    logger.info(f"Saved recording of subject {rec.subject_id} to {path}")


def load_directory(directory: Path) -> list[Recording]:
    """
    Load every ``*.eegr`` file of ``directory`` in name order.

    Raises:
        ApplicationError: DATA error if the directory holds no recordings.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ApplicationError(
            detail=f"Data directory {directory} does not exist",
            category=ErrorCategory.DATA,
        )
    paths = sorted(directory.glob(f"*{SUFFIX}"))
    if not paths:
        logger.error(f"No {SUFFIX} files in {directory}")
        raise ApplicationError(
            detail=f"No {SUFFIX} recordings found in {directory}",
            category=ErrorCategory.DATA,
        )
    return [load_recording(path) for path in paths]
