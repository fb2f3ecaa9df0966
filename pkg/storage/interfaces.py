"""Repository interfaces (Protocols) for the storage layer.

Services depend on these contracts so the manifest-backed storage and the
in-memory fake can be swapped without touching training or evaluation logic.
"""

from typing import List, Optional, Protocol, Tuple

from models.dataset import ManifestEntry, Split
from models.volume import LandmarkSet, Volume


class DatasetRepository(Protocol):
    def entries(self, split: Optional[Split] = None) -> List[ManifestEntry]: ...

    def load_case(self, entry: ManifestEntry) -> Tuple[Volume, LandmarkSet]: ...
