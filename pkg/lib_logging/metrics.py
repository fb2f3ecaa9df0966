"""Prometheus run metrics written as a textfile next to run outputs."""

from pathlib import Path
from typing import Union

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram
from prometheus_client import write_to_textfile

from lib_logging.logger import get_logger

logger = get_logger(__name__)


class RunMetrics:
    """Counters, gauges and a latency histogram for one pipeline run.

    Each instance owns its registry so repeated runs in one process (tests,
    evaluation sweeps) never collide on metric names.
    """

    def __init__(self) -> None:
        self.registry = CollectorRegistry()
        self.training_iterations = Counter(
            "pin_training_iterations_total",
            "Optimiser steps taken",
            registry=self.registry,
        )
        self.inference_iterations = Counter(
            "pin_inference_iterations_total",
            "Update-rule applications across all starts",
            ["rule"],
            registry=self.registry,
        )
        self.patches_extracted = Counter(
            "pin_patches_extracted_total",
            "2.5D patch stacks extracted",
            registry=self.registry,
        )
        self.loss = Gauge(
            "pin_training_loss",
            "Most recent loss terms",
            ["term"],
            registry=self.registry,
        )
        self.inference_seconds = Histogram(
            "pin_inference_duration_seconds",
            "Per-volume inference wall time",
            buckets=(0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0),
            registry=self.registry,
        )

    def write(self, path: Union[str, Path]) -> None:
        """Write the registry in Prometheus text format."""
        write_to_textfile(str(path), self.registry)
        logger.debug(f"Wrote metrics to {path}")
