"""Manifest-backed dataset of phantom volumes and their landmarks."""

import csv
import io
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from core.errors import FormatError, MissingArtifactError
from lib_logging.logger import get_logger
from models.dataset import ManifestEntry, Split
from models.volume import LandmarkSet, Volume
from storage.atomic import atomic_write_text
from storage.landmark_storage import read_landmarks
from storage.volume_storage import read_volume

logger = get_logger(__name__)

MANIFEST_HEADER = ["index", "volume_path", "landmarks_path", "split"]


def write_manifest(entries: List[ManifestEntry], path: Union[str, Path]) -> None:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=MANIFEST_HEADER, lineterminator="\n")
    writer.writeheader()
    for entry in entries:
        writer.writerow(entry.to_dict())
    atomic_write_text(Path(path), buffer.getvalue())


def read_manifest(path: Union[str, Path]) -> List[ManifestEntry]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(path, "manifest")
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != MANIFEST_HEADER:
                raise FormatError(f"{path}: expected header {','.join(MANIFEST_HEADER)}")
            return [ManifestEntry.from_dict(row) for row in reader]
    except FormatError:
        raise
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: not valid UTF-8 ({e.reason})")
    except csv.Error as e:
        raise FormatError(f"{path}: unreadable CSV ({e})")
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(f"{path}: malformed manifest row: {e}")


class ManifestDatasetStorage:
    """Reads cases listed in ``manifest.csv``; loaded cases are cached."""

    def __init__(self, manifest_path: Union[str, Path]):
        self.manifest_path = Path(manifest_path)
        self.root = self.manifest_path.parent
        self._entries = read_manifest(self.manifest_path)
        self._cache: Dict[int, Tuple[Volume, LandmarkSet]] = {}
        logger.info(
            f"Loaded manifest {self.manifest_path} with {len(self._entries)} entries"
        )

    def entries(self, split: Optional[Split] = None) -> List[ManifestEntry]:
        return [e for e in self._entries if split is None or e.split == split]

    def load_case(self, entry: ManifestEntry) -> Tuple[Volume, LandmarkSet]:
        if entry.index not in self._cache:
            volume = read_volume(self.root / entry.volume_path)
            landmarks = read_landmarks(self.root / entry.landmarks_path)
            self._cache[entry.index] = (volume, landmarks)
        return self._cache[entry.index]
