"""Error hierarchy shared by every package.

Services raise these; the CLI maps any ``PinError`` to exit code 2.
"""

from pathlib import Path
from typing import Optional, Sequence, Union


class PinError(Exception):
    """Base class for all errors raised by the PIN pipeline."""


class ShapeError(PinError, ValueError):
    """Tensor or layer shapes do not agree."""

    def __init__(self, op: str, expected: object, got: Sequence[int]):
        self.op = op
        self.expected = expected
        self.got = tuple(got)
        super().__init__(f"{op}: expected shape {expected}, got {self.got}")


class NonFiniteError(PinError, ArithmeticError):
    """NaN or Inf appeared in a value, gradient or parameter block."""

    def __init__(self, where: str):
        self.where = where
        super().__init__(f"Non-finite values in {where}")


class FormatError(PinError, ValueError):
    """A file does not follow its declared format."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""

    def __init__(self, path: Union[str, Path], expected: bytes, got: bytes):
        self.path = str(path)
        super().__init__(
            f"bad magic in {path}: expected {expected!r}, got {got!r}"
        )


class TruncatedPayloadError(FormatError):
    """Header promises more payload than the file holds."""

    def __init__(self, path: Union[str, Path], expected: int, got: int):
        self.path = str(path)
        self.expected = expected
        self.got = got
        super().__init__(
            f"truncated payload in {path}: expected {expected} bytes, got {got}"
        )


class InvalidHeaderError(FormatError):
    """Header fields violate the format's invariants."""


class LandmarkParseError(FormatError):
    """Landmark CSV could not be parsed."""

    def __init__(self, path: Union[str, Path], message: str, line: int = 0):
        self.path = str(path)
        self.line = line
        where = f"{path}, line {line}" if line else str(path)
        super().__init__(f"{where}: {message}")


class ConfigError(PinError, ValueError):
    """Unknown key, malformed value or violated configuration invariant."""


class PhantomGenerationError(PinError, RuntimeError):
    """Pose sampling could not keep every landmark inside the volume."""


class TrainingDivergedError(PinError, RuntimeError):
    """Loss became non-finite; the last good checkpoint is kept."""

    def __init__(self, iteration: int, last_checkpoint: Optional[Path]):
        self.iteration = iteration
        self.last_checkpoint = last_checkpoint
        super().__init__(
            f"Non-finite loss at iteration {iteration}; "
            f"last good checkpoint: {last_checkpoint or 'none'}"
        )


class InferenceError(PinError, RuntimeError):
    """Iterative inference could not produce a valid position."""


class MissingArtifactError(PinError, FileNotFoundError):
    """A checkpoint, model, volume or manifest file is missing."""

    def __init__(self, path: Union[str, Path], what: str = "file"):
        self.path = str(path)
        self.what = what
        super().__init__(f"{what} not found: {path}")
