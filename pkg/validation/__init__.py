"""Validation package for the PIN landmark pipeline."""

from .config_validator import (
    validate_inference_config,
    validate_network_config,
    validate_patch_side,
    validate_phantom_config,
    validate_train_config,
)

__all__ = [
    "validate_patch_side",
    "validate_phantom_config",
    "validate_network_config",
    "validate_train_config",
    "validate_inference_config",
]
