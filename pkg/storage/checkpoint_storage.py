"""``.pinc`` checkpoint files.

Layout: magic ``PINC1\\0``, uint32 LE manifest length, the manifest as UTF-8
``key=value`` lines, then every parameter block as float32 LE in declaration
order. The manifest's ``params`` key lists ``name:d0xd1x...`` in that order.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from core.errors import (
    BadMagicError,
    FormatError,
    InvalidHeaderError,
    MissingArtifactError,
    TruncatedPayloadError,
)
from lib_logging.logger import get_logger
from storage.atomic import atomic_write_bytes

logger = get_logger(__name__)

CHECKPOINT_MAGIC = b"PINC1\0"
_LENGTH = struct.Struct("<I")


@dataclass(eq=False)
class Checkpoint:
    """Manifest plus named parameter blocks, in declaration order."""

    manifest: Dict[str, str]
    blocks: Dict[str, np.ndarray] = field(default_factory=dict)


def _block_layout(blocks: Dict[str, np.ndarray]) -> str:
    return ",".join(
        f"{name}:{'x'.join(str(d) for d in array.shape)}" for name, array in blocks.items()
    )


def _parse_layout(layout: str, source) -> List[Tuple[str, Tuple[int, ...]]]:
    result = []
    for item in filter(None, layout.split(",")):
        try:
            name, dims = item.rsplit(":", 1)
            shape = tuple(int(d) for d in dims.split("x"))
        except ValueError:
            raise InvalidHeaderError(f"{source}: malformed parameter entry {item!r}")
        result.append((name, shape))
    return result


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    manifest = dict(checkpoint.manifest)
    manifest["params"] = _block_layout(checkpoint.blocks)
    text = "".join(f"{key}={manifest[key]}\n" for key in sorted(manifest))
    encoded = text.encode("utf-8")
    body = b"".join(
        np.ascontiguousarray(array).astype("<f4").tobytes()
        for array in checkpoint.blocks.values()
    )
    return CHECKPOINT_MAGIC + _LENGTH.pack(len(encoded)) + encoded + body


def decode_checkpoint(raw: bytes, source: Union[str, Path] = "<bytes>") -> Checkpoint:
    magic = raw[: len(CHECKPOINT_MAGIC)]
    if magic != CHECKPOINT_MAGIC:
        raise BadMagicError(source, CHECKPOINT_MAGIC, magic)
    offset = len(CHECKPOINT_MAGIC)
    if len(raw) < offset + _LENGTH.size:
        raise TruncatedPayloadError(source, offset + _LENGTH.size, len(raw))
    (length,) = _LENGTH.unpack_from(raw, offset)
    offset += _LENGTH.size
    if len(raw) < offset + length:
        raise TruncatedPayloadError(source, offset + length, len(raw))

    try:
        text = raw[offset : offset + length].decode("utf-8")
    except UnicodeDecodeError as e:
        raise InvalidHeaderError(f"{source}: manifest is not valid UTF-8 ({e.reason})")

    manifest: Dict[str, str] = {}
    for line in text.splitlines():
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidHeaderError(f"{source}: malformed manifest line {line!r}")
        manifest[key] = value
    offset += length

    layout = _parse_layout(manifest.get("params", ""), source)
    expected = sum(4 * int(np.prod(shape)) for _, shape in layout)
    payload = raw[offset:]
    if len(payload) < expected:
        raise TruncatedPayloadError(source, expected, len(payload))
    if len(payload) > expected:
        raise FormatError(f"{source}: {len(payload) - expected} trailing bytes")

    blocks: Dict[str, np.ndarray] = {}
    cursor = 0
    for name, shape in layout:
        count = int(np.prod(shape))
        blocks[name] = (
            np.frombuffer(payload, dtype="<f4", count=count, offset=cursor)
            .astype(np.float32)
            .reshape(shape)
        )
        cursor += 4 * count
    return Checkpoint(manifest=manifest, blocks=blocks)


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> None:
    atomic_write_bytes(Path(path), encode_checkpoint(checkpoint))
    logger.info(
        f"Saved checkpoint {path}",
        extra={"extra_data": {"iteration": checkpoint.manifest.get("iteration")}},
    )


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(path, "checkpoint")
    return decode_checkpoint(path.read_bytes(), path)
