"""Factory pattern: centralize creation of services and storage for DI and consistency."""

from pathlib import Path
from typing import Optional, Union

from lib_logging.metrics import RunMetrics
from services.evaluation_service import EvaluationService
from services.inference_service import InferenceService
from services.shape_service import ShapeService
from services.training_service import TrainingService
from storage.dataset_storage import ManifestDatasetStorage
from storage.interfaces import DatasetRepository


class StorageFactory:
    """Single place that decides how datasets are read (manifest files on disk)."""

    def create_dataset_storage(self, manifest_path: Union[str, Path]) -> DatasetRepository:
        return ManifestDatasetStorage(manifest_path)


class ServiceFactory:
    """
    Factory for creating pipeline services (Factory + DI).
    Injects the dataset repository so services are testable with fakes.
    """

    def __init__(
        self,
        dataset_storage: Optional[DatasetRepository] = None,
        metrics: Optional[RunMetrics] = None,
    ):
        self._dataset_storage = dataset_storage
        self._storage_factory = StorageFactory()
        self.metrics = metrics or RunMetrics()

    def _storage(self, manifest_path: Optional[Union[str, Path]]) -> DatasetRepository:
        if self._dataset_storage is not None:
            return self._dataset_storage
        if manifest_path is None:
            raise ValueError("A manifest path is needed when no dataset storage is injected")
        self._dataset_storage = self._storage_factory.create_dataset_storage(manifest_path)
        return self._dataset_storage

    def create_shape_service(self, manifest_path: Optional[Union[str, Path]] = None) -> ShapeService:
        return ShapeService(storage=self._storage(manifest_path))

    def create_training_service(
        self, manifest_path: Optional[Union[str, Path]] = None
    ) -> TrainingService:
        return TrainingService(storage=self._storage(manifest_path), metrics=self.metrics)

    def create_inference_service(self) -> InferenceService:
        return InferenceService(metrics=self.metrics)

    def create_evaluation_service(
        self, manifest_path: Optional[Union[str, Path]] = None, runtime_repeats: int = 3
    ) -> EvaluationService:
        return EvaluationService(
            storage=self._storage(manifest_path),
            metrics=self.metrics,
            runtime_repeats=runtime_repeats,
        )
