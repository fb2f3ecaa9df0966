"""Dataset manifest entries."""

from dataclasses import dataclass
from enum import Enum


class Split(Enum):
    """Train/test membership of a generated case."""

    TRAIN = "train"
    TEST = "test"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ManifestEntry:
    """One row of ``manifest.csv``; paths are relative to the manifest directory."""

    index: int
    volume_path: str
    landmarks_path: str
    split: Split

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "volume_path": self.volume_path,
            "landmarks_path": self.landmarks_path,
            "split": self.split.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ManifestEntry":
        return cls(
            index=int(data["index"]),
            volume_path=data["volume_path"],
            landmarks_path=data["landmarks_path"],
            split=Split(data["split"]),
        )
