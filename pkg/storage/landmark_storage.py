"""Landmark CSV files: header ``id,x,y,z``, ids ``0..n_l-1`` in order."""

import csv
import io
from pathlib import Path
from typing import Union

from core.errors import LandmarkParseError, MissingArtifactError
from lib_logging.logger import get_logger
from models.volume import LandmarkSet
from storage.atomic import atomic_write_text

logger = get_logger(__name__)

LANDMARK_HEADER = ["id", "x", "y", "z"]


def write_landmarks(landmarks: LandmarkSet, path: Union[str, Path]) -> None:
    """Write landmarks with shortest round-trip float formatting."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(LANDMARK_HEADER)
    for index, (x, y, z) in enumerate(landmarks.points):
        writer.writerow([index, repr(float(x)), repr(float(y)), repr(float(z))])
    atomic_write_text(Path(path), buffer.getvalue())
    logger.debug(f"Wrote {landmarks.n_landmarks} landmarks to {path}")


def read_landmarks(path: Union[str, Path]) -> LandmarkSet:
    """Parse a landmark CSV; errors carry the offending line number."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(path, "landmark file")

    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except UnicodeDecodeError as e:
        raise LandmarkParseError(path, f"not valid UTF-8 ({e.reason})")
    except csv.Error as e:
        raise LandmarkParseError(path, f"unreadable CSV ({e})")

    rows = [(line_no, row) for line_no, row in enumerate(rows, start=1) if row]
    if not rows:
        raise LandmarkParseError(path, "no landmarks")
    header_line, header = rows[0]
    if [h.strip() for h in header] != LANDMARK_HEADER:
        raise LandmarkParseError(
            path, f"expected header {','.join(LANDMARK_HEADER)}", header_line
        )
    if len(rows) == 1:
        raise LandmarkParseError(path, "no landmarks")

    seen = set()
    points = []
    for line_no, row in rows[1:]:
        if len(row) != 4:
            raise LandmarkParseError(path, f"expected 4 fields, got {len(row)}", line_no)
        try:
            landmark_id = int(row[0])
        except ValueError:
            raise LandmarkParseError(path, f"non-integer id {row[0]!r}", line_no)
        if landmark_id in seen:
            raise LandmarkParseError(path, f"duplicate id {landmark_id}", line_no)
        if landmark_id != len(points):
            raise LandmarkParseError(
                path, f"missing id {len(points)} (found {landmark_id})", line_no
            )
        seen.add(landmark_id)
        try:
            points.append([float(v) for v in row[1:]])
        except ValueError:
            raise LandmarkParseError(path, f"non-numeric coordinate in {row}", line_no)

    try:
        return LandmarkSet.create(points)
    except ValueError as e:
        raise LandmarkParseError(path, str(e))
