"""
MHCK checkpoint container.

Little-endian layout: magic ``MHCK``, u32 version, u32 tensor count, then per tensor
u32 name length, UTF-8 name, u32 rank, u64 per dimension and the f32 row-major
payload; a trailing u64 FNV-1a hash covers every preceding byte.
"""

import logging
import struct
from pathlib import Path

import numpy as np

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.network.params import ModelParams
from app.schemas.csp import CSPModel

logger = logging.getLogger(__name__)

MAGIC = b"MHCK"
VERSION = 1
FILE_NAME = "checkpoint.mhck"
CSP_FILTERS = "csp.filters"
CSP_EIGENVALUES = "csp.eigenvalues"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1

_HEADER = struct.Struct("<4sII")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def fnv1a_64(data: bytes) -> int:
    digest = _FNV_OFFSET
    for byte in data:
        digest = ((digest ^ byte) * _FNV_PRIME) & _MASK
    return digest


def _format_error(path: Path, offset: int, detail: str) -> ApplicationError:
    message = f"{path}: byte {offset}: {detail}"
    logger.error(message)
    return ApplicationError(detail=message, category=ErrorCategory.FORMAT)


def encode_checkpoint(tensors: dict[str, np.ndarray]) -> bytes:
    chunks = [_HEADER.pack(MAGIC, VERSION, len(tensors))]
    for name, array in tensors.items():
        encoded = name.encode("utf-8")
        array = np.asarray(array)
        chunks.append(_U32.pack(len(encoded)) + encoded + _U32.pack(array.ndim))
        chunks.extend(_U64.pack(dim) for dim in array.shape)
        chunks.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    body = b"".join(chunks)
    return body + _U64.pack(fnv1a_64(body))


def decode_checkpoint(buffer: bytes, path: Path = Path("<memory>")) -> dict[str, np.ndarray]:
    """
    Parse and integrity-check an MHCK byte string.

    Returns:
        dict[str, np.ndarray]: float32 arrays in file order.

    Raises:
        ApplicationError: FORMAT error naming the byte offset of the first defect.
    """
    if len(buffer) < _HEADER.size + _U64.size:
        raise _format_error(path, 0, f"truncated: {len(buffer)} bytes is below the minimum size")
    body, trailer = buffer[: -_U64.size], buffer[-_U64.size :]
    (stored,) = _U64.unpack(trailer)
    if fnv1a_64(body) != stored:
        raise _format_error(path, len(body), "content hash mismatch")

    magic, version, count = _HEADER.unpack_from(body, 0)
    if magic != MAGIC:
        raise _format_error(path, 0, f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise _format_error(path, 4, f"unsupported version {version}")

    def take(offset: int, size: int, what: str) -> int:
        if offset + size > len(body):
            raise _format_error(
                path, offset, f"truncated {what}: expected {offset + size} bytes, body has {len(body)}"
            )
        return offset + size

    tensors: dict[str, np.ndarray] = {}
    offset = _HEADER.size
    for _ in range(count):
        end = take(offset, _U32.size, "name length")
        (name_length,) = _U32.unpack_from(body, offset)
        start, offset = end, take(end, name_length, "name")
        name = body[start:offset].decode("utf-8", errors="strict")
        end = take(offset, _U32.size, "rank")
        (rank,) = _U32.unpack_from(body, offset)
        offset = take(end, rank * _U64.size, "dimensions")
        shape = tuple(_U64.unpack_from(body, end + i * _U64.size)[0] for i in range(rank))
        size = int(np.prod(shape, dtype=np.uint64)) if shape else 1
        start, offset = offset, take(offset, size * 4, f"payload of {name}")
        tensors[name] = np.frombuffer(body, dtype="<f4", count=size, offset=start).reshape(shape).astype(np.float32)
    if offset != len(body):
        raise _format_error(path, offset, f"{len(body) - offset} unexpected bytes before the hash")
    return tensors


def save_checkpoint(path: Path, params: ModelParams, csp: CSPModel | None = None) -> None:
    """
    Write parameters, batch-norm statistics and optionally the frozen CSP filters.
    """
    tensors = params.state_dict()
    if csp is not None:
        tensors[CSP_FILTERS] = csp.filters
        tensors[CSP_EIGENVALUES] = csp.eigenvalues
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(tensors))
    logger.info(f"Checkpoint with {len(tensors)} tensors saved to {path}")


def load_checkpoint(path: Path) -> dict[str, np.ndarray]:
    path = Path(path)
    tensors = decode_checkpoint(path.read_bytes(), path)
    logger.info(f"Checkpoint with {len(tensors)} tensors loaded from {path}")
    return tensors


def csp_from_checkpoint(tensors: dict[str, np.ndarray], shrinkage: float = 0.0) -> CSPModel:
    if CSP_FILTERS not in tensors or CSP_EIGENVALUES not in tensors:
        raise ApplicationError(
            detail="Checkpoint carries no CSP filters",
            category=ErrorCategory.FORMAT,
        )
    return CSPModel(
        filters=tensors[CSP_FILTERS].astype(np.float64),
        eigenvalues=tensors[CSP_EIGENVALUES].astype(np.float64),
        shrinkage=shrinkage,
    )
