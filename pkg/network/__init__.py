"""The PIN network, its labels, loss, patches and training samples."""

from .labels import direction_of, gt_label, gt_labels, one_hot
from .loss import PROB_FLOOR, LossTerms, joint_loss, loss_terms
from .patches import extract_patch, extract_patch_block, round_half_up
from .pin_network import (
    PinNetwork,
    network_config_from_manifest,
    network_manifest,
    parameter_shapes,
)
from .samples import make_sample_multi, make_sample_single, sample_b, sample_position

__all__ = [
    "PinNetwork",
    "network_manifest",
    "network_config_from_manifest",
    "parameter_shapes",
    "gt_label",
    "gt_labels",
    "one_hot",
    "direction_of",
    "LossTerms",
    "PROB_FLOOR",
    "joint_loss",
    "loss_terms",
    "extract_patch",
    "extract_patch_block",
    "round_half_up",
    "make_sample_single",
    "make_sample_multi",
    "sample_b",
    "sample_position",
]
