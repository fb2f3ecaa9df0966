"""Logging package for the PIN landmark pipeline."""

from .logger import get_logger
from .metrics import RunMetrics

__all__ = ["get_logger", "RunMetrics"]
