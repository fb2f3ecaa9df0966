"""``.pinv`` volume files.

Layout: magic ``PINV1\\0``, three uint32 LE dims, three float32 LE spacings, then
row-major float32 LE intensities with x varying fastest.
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from core.errors import (
    BadMagicError,
    FormatError,
    InvalidHeaderError,
    MissingArtifactError,
    TruncatedPayloadError,
)
from lib_logging.logger import get_logger
from models.volume import Volume
from storage.atomic import atomic_write_bytes

logger = get_logger(__name__)

VOLUME_MAGIC = b"PINV1\0"
_HEADER = struct.Struct("<3I3f")


def encode_volume(volume: Volume) -> bytes:
    """Serialise a volume to the ``.pinv`` byte layout."""
    header = _HEADER.pack(*volume.dims, *volume.spacing)
    payload = volume.intensities.astype("<f4").tobytes(order="F")
    return VOLUME_MAGIC + header + payload


def decode_volume(raw: bytes, source: Union[str, Path] = "<bytes>") -> Volume:
    """Parse ``.pinv`` bytes; raises a ``FormatError`` subclass on bad input."""
    magic = raw[: len(VOLUME_MAGIC)]
    if magic != VOLUME_MAGIC:
        raise BadMagicError(source, VOLUME_MAGIC, magic)
    offset = len(VOLUME_MAGIC)
    if len(raw) < offset + _HEADER.size:
        raise TruncatedPayloadError(source, offset + _HEADER.size, len(raw))

    nx, ny, nz, sx, sy, sz = _HEADER.unpack_from(raw, offset)
    if min(nx, ny, nz) == 0:
        raise InvalidHeaderError(f"non-positive dims in {source}: {(nx, ny, nz)}")
    if not min(sx, sy, sz) > 0:
        raise InvalidHeaderError(f"non-positive spacing in {source}: {(sx, sy, sz)}")

    offset += _HEADER.size
    expected = nx * ny * nz * 4
    payload = raw[offset:]
    if len(payload) < expected:
        raise TruncatedPayloadError(source, expected, len(payload))
    if len(payload) > expected:
        raise FormatError(
            f"{source}: {len(payload) - expected} trailing bytes after payload"
        )

    data = np.frombuffer(payload, dtype="<f4").reshape((nx, ny, nz), order="F")
    if not np.isfinite(data).all():
        raise FormatError(f"{source}: payload holds NaN or Inf intensities")
    return Volume.create(data.astype(np.float32), (sx, sy, sz))


def write_volume(volume: Volume, path: Union[str, Path]) -> None:
    """Write a volume atomically."""
    atomic_write_bytes(Path(path), encode_volume(volume))
    logger.debug(f"Wrote volume {volume.dims} to {path}")


def read_volume(path: Union[str, Path]) -> Volume:
    """Read a ``.pinv`` file."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(path, "volume")
    return decode_volume(path.read_bytes(), path)
