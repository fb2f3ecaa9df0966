"""Atomic file writes: write a sibling temp file, then replace."""

from pathlib import Path

from lib_logging.logger import get_logger

logger = get_logger(__name__)


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_name(path.name + ".tmp")
    try:
        temp_file.write_bytes(payload)
        temp_file.replace(path)
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        temp_file.unlink(missing_ok=True)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
