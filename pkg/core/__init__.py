"""Core abstractions: error hierarchy and service factory.

``core.factory`` is imported explicitly by callers; it pulls in every service
and would make ``core.errors`` circular for the low-level packages.
"""

from .errors import (
    BadMagicError,
    ConfigError,
    FormatError,
    InferenceError,
    InvalidHeaderError,
    LandmarkParseError,
    MissingArtifactError,
    NonFiniteError,
    PhantomGenerationError,
    PinError,
    ShapeError,
    TrainingDivergedError,
    TruncatedPayloadError,
)

__all__ = [
    "PinError",
    "ShapeError",
    "NonFiniteError",
    "FormatError",
    "BadMagicError",
    "TruncatedPayloadError",
    "InvalidHeaderError",
    "LandmarkParseError",
    "ConfigError",
    "PhantomGenerationError",
    "TrainingDivergedError",
    "InferenceError",
    "MissingArtifactError",
]
