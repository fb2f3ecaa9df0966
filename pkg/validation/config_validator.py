"""Validation of phantom, network, training and inference settings."""

from typing import Tuple

from models.inference import InferenceConfig
from models.network import NetworkConfig, TrainConfig
from models.phantom import PhantomConfig

LANDMARK_MARGIN = 2.0

# Smallest blob sigma (voxels, after the smallest pose scale) that still lets
# the peak fit land within half a voxel of its landmark.
MIN_BLOB_SIGMA = 0.9


def validate_patch_side(side: int) -> Tuple[bool, str]:
    """Patch side must be a positive odd integer (a unique centre voxel exists)."""
    if not isinstance(side, int) or isinstance(side, bool):
        return False, f"Patch side must be an integer, got {side!r}"
    if side < 1:
        return False, f"Patch side must be positive, got {side}"
    if side % 2 == 0:
        return False, f"Patch side must be odd, got {side}"
    return True, ""


def validate_phantom_config(config: PhantomConfig) -> Tuple[bool, str]:
    """
    Validate phantom settings.

    Besides per-field ranges, the pose ranges must keep every landmark at least
    two voxels inside the volume even in the worst case, and the volume must be
    large enough that the smallest blob still spans about a voxel.

    Returns:
        Tuple of (is_valid, error_message)
    """
    if len(config.dims) != 3 or any(d < 8 for d in config.dims):
        return False, f"Phantom dims must be 3 extents >= 8, got {config.dims}"
    if config.spacing <= 0:
        return False, f"Spacing must be positive, got {config.spacing}"
    if not 1 <= config.n_landmarks <= 10:
        return False, f"n_landmarks must be in [1, 10], got {config.n_landmarks}"
    if config.translation_range < 0 or config.rotation_range_deg < 0:
        return False, "Pose ranges must be non-negative"
    if config.rotation_range_deg > 90:
        return False, f"Rotation range must be <= 90 degrees, got {config.rotation_range_deg}"
    if not 0 < config.scale_min <= config.scale_max:
        return False, (
            f"Scale range must satisfy 0 < min <= max, got "
            f"({config.scale_min}, {config.scale_max})"
        )
    if config.noise_sigma < 0:
        return False, f"Noise sigma must be non-negative, got {config.noise_sigma}"

    smallest_sigma = float(config.blob_sigmas.min()) * config.scale_min
    if smallest_sigma < MIN_BLOB_SIGMA:
        return False, (
            f"Volume {config.dims} is too small to resolve the landmark blobs "
            f"(smallest blob sigma {smallest_sigma:.2f} < {MIN_BLOB_SIGMA} voxels)"
        )

    # Worst case per axis: the farthest canonical landmark scaled by scale_max and
    # rotated onto the axis, plus the full translation.
    reach = config.canonical_extent * config.scale_max + config.translation_range
    half = min(config.dims) / 2.0 - 0.5
    if reach > half - LANDMARK_MARGIN:
        return False, (
            f"Pose ranges can push landmarks within {LANDMARK_MARGIN} voxels of the "
            f"border (reach {reach:.1f} > {half - LANDMARK_MARGIN:.1f})"
        )
    return True, ""


def validate_network_config(config: NetworkConfig) -> Tuple[bool, str]:
    is_valid, error_msg = validate_patch_side(config.input_side)
    if not is_valid:
        return False, error_msg
    if config.input_channels < 3 or config.input_channels % 3 != 0:
        return False, f"Input channels must be a positive multiple of 3, got {config.input_channels}"
    if not config.conv_channels or any(c < 1 for c in config.conv_channels):
        return False, f"conv_channels must be positive, got {config.conv_channels}"
    if any(w < 1 for w in config.fc_widths):
        return False, f"fc_widths must be positive, got {config.fc_widths}"
    if config.n_o < 1:
        return False, f"n_o must be positive, got {config.n_o}"
    if not 0.0 <= config.dropout_rate < 1.0:
        return False, f"Dropout rate must be in [0, 1), got {config.dropout_rate}"
    side = config.input_side
    for stage, _ in enumerate(config.conv_channels, start=1):
        if side < 2:
            return False, (
                f"Patch side {config.input_side} is too small for "
                f"{len(config.conv_channels)} pooling stages (stage {stage} sees {side})"
            )
        side //= 2
    return True, ""


def validate_train_config(config: TrainConfig) -> Tuple[bool, str]:
    if not 0.0 <= config.alpha <= 1.0:
        return False, f"alpha must be in [0, 1], got {config.alpha}"
    if config.batch_size < 1:
        return False, f"Batch size must be >= 1, got {config.batch_size}"
    if config.iterations < 1:
        return False, f"Iterations must be >= 1, got {config.iterations}"
    if config.learning_rate <= 0:
        return False, f"Learning rate must be positive, got {config.learning_rate}"
    if not (0.0 <= config.beta1 < 1.0 and 0.0 <= config.beta2 < 1.0):
        return False, f"Adam betas must be in [0, 1), got ({config.beta1}, {config.beta2})"
    if config.weight_init_sigma <= 0:
        return False, f"Weight init sigma must be positive, got {config.weight_init_sigma}"
    if config.b_sample_sigma_multiplier <= 0:
        return False, "b_sample_sigma_multiplier must be positive"
    if config.checkpoint_interval < 1 or config.log_interval < 1:
        return False, "Checkpoint and log intervals must be >= 1"
    return True, ""


def validate_inference_config(config: InferenceConfig) -> Tuple[bool, str]:
    if config.T < 1:
        return False, f"T must be >= 1, got {config.T}"
    if config.early_stop_epsilon < 0:
        return False, f"Early stop epsilon must be >= 0, got {config.early_stop_epsilon}"
    if config.n_random_inits_multi < 0:
        return False, f"n_random_inits_multi must be >= 0, got {config.n_random_inits_multi}"
    return True, ""
