"""``.pins`` shape model files.

Layout: magic ``PINS1\\0``, uint32 LE ``n_l`` and ``n_b``, then float64 LE mean
(``3 n_l``), eigenvalues (``n_b``) and eigenvectors (``3 n_l x n_b``, row-major).
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
from models.shape import ShapeModel
from storage.atomic import atomic_write_bytes

logger = get_logger(__name__)

SHAPE_MAGIC = b"PINS1\0"
_DIMS = struct.Struct("<2I")


def encode_shape_model(model: ShapeModel) -> bytes:
    dims = _DIMS.pack(model.n_landmarks, model.n_modes)
    return (
        SHAPE_MAGIC
        + dims
        + model.mean.astype("<f8").tobytes()
        + model.eigenvalues.astype("<f8").tobytes()
        + np.ascontiguousarray(model.eigenvectors).astype("<f8").tobytes(order="C")
    )


def decode_shape_model(raw: bytes, source: Union[str, Path] = "<bytes>") -> ShapeModel:
    magic = raw[: len(SHAPE_MAGIC)]
    if magic != SHAPE_MAGIC:
        if magic[:4] == SHAPE_MAGIC[:4]:
            raise InvalidHeaderError(f"unsupported shape model version in {source}: {magic!r}")
        raise BadMagicError(source, SHAPE_MAGIC, magic)
    offset = len(SHAPE_MAGIC)
    if len(raw) < offset + _DIMS.size:
        raise TruncatedPayloadError(source, offset + _DIMS.size, len(raw))
    n_l, n_b = _DIMS.unpack_from(raw, offset)
    offset += _DIMS.size
    dim = 3 * n_l
    if n_l == 0 or n_b == 0 or n_b >= dim:
        raise InvalidHeaderError(
            f"{source}: shape model needs 1 <= n_b < 3*n_l, got n_l={n_l}, n_b={n_b}"
        )

    expected = 8 * (dim + n_b + dim * n_b)
    payload = raw[offset:]
    if len(payload) < expected:
        raise TruncatedPayloadError(source, expected, len(payload))
    if len(payload) > expected:
        raise FormatError(f"{source}: {len(payload) - expected} trailing bytes")

    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if not np.isfinite(values).all():
        raise FormatError(f"{source}: shape model holds NaN or Inf values")
    mean = values[:dim].copy()
    eigenvalues = values[dim : dim + n_b].copy()
    eigenvectors = values[dim + n_b :].reshape(dim, n_b).copy()
    return ShapeModel(mean=mean, eigenvectors=eigenvectors, eigenvalues=eigenvalues)


def save_shape_model(model: ShapeModel, path: Union[str, Path]) -> None:
    atomic_write_bytes(Path(path), encode_shape_model(model))
    logger.info(
        f"Saved shape model to {path}",
        extra={"extra_data": {"n_l": model.n_landmarks, "n_b": model.n_modes}},
    )


def load_shape_model(path: Union[str, Path]) -> ShapeModel:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(path, "shape model")
    return decode_shape_model(path.read_bytes(), path)
