"""In-memory (fake) dataset used for unit tests.

Mirrors the public API of ``ManifestDatasetStorage`` without touching disk.
"""

from typing import List, Optional, Tuple

from lib_logging.logger import get_logger
from models.dataset import ManifestEntry, Split
from models.volume import LandmarkSet, Volume

logger = get_logger(__name__)


class FakeDatasetStorage:
    """In-memory dataset used for tests."""

    def __init__(self):
        self._entries: List[ManifestEntry] = []
        self._cases: dict = {}

    def add_case(
        self, volume: Volume, landmarks: LandmarkSet, split: Split = Split.TRAIN
    ) -> ManifestEntry:
        index = len(self._entries)
        entry = ManifestEntry(
            index=index,
            volume_path=f"case_{index:04d}.pinv",
            landmarks_path=f"case_{index:04d}.csv",
            split=split,
        )
        self._entries.append(entry)
        self._cases[index] = (volume, landmarks)
        return entry

    def entries(self, split: Optional[Split] = None) -> List[ManifestEntry]:
        return [e for e in self._entries if split is None or e.split == split]

    def load_case(self, entry: ManifestEntry) -> Tuple[Volume, LandmarkSet]:
        if entry.index not in self._cases:
            logger.warning(f"Case {entry.index} not found in fake dataset")
            raise KeyError(entry.index)
        return self._cases[entry.index]
