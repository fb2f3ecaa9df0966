"""Run configuration for the PIN landmark pipeline."""

from .settings import DEFAULTS, ECHO_FILE, RunConfig

__all__ = ["RunConfig", "DEFAULTS", "ECHO_FILE"]
