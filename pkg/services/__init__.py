"""Services package: phantom, shape, training, inference and evaluation logic.

Only the services without a network dependency are re-exported here; the
training, inference and evaluation services are imported from their modules.
"""

from .phantom_service import generate_dataset, generate_phantom, refine_peak
from .shape_service import ShapeService, fit_shape_model, jacobi_eigh

__all__ = [
    "generate_phantom",
    "generate_dataset",
    "refine_peak",
    "ShapeService",
    "fit_shape_model",
    "jacobi_eigh",
]
