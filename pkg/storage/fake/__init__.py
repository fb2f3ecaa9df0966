"""In-memory storage fakes for tests."""

from .dataset_storage import FakeDatasetStorage

__all__ = ["FakeDatasetStorage"]
