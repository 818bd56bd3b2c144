"""
Exception hierarchy for the court tracking engine.

Every exception carries the process exit code the command-line front end
returns when it escapes to the top level:

    2  configuration error
    3  data error
    4  internal invariant violation
"""

from __future__ import annotations

from pathlib import Path


class CourtFusionError(Exception):
    """Base class for all engine errors."""

    exit_code = 4


# ── Configuration (exit 2) ───────────────────────────────────────────────────

class ConfigurationError(CourtFusionError):
    """Invalid or missing configuration, calibration or grid."""

    exit_code = 2


class InvalidTransformError(ConfigurationError):
    """Rotation matrix is not orthonormal with determinant +1."""


# ── Data (exit 3) ────────────────────────────────────────────────────────────

class DataError(CourtFusionError):
    """Input data is missing, malformed or inconsistent."""

    exit_code = 3


class EmptyInputError(DataError):
    """An operation received no input where at least one item is required."""


class FrameError(DataError):
    """Point clouds disagree on coordinate frame or timestamp."""


class SequencingError(DataError):
    """Frames were presented out of timestamp order."""


class AlignmentError(DataError):
    """Ground truth and predictions cover incompatible frame ranges."""


class ProviderError(DataError):
    """A detection or embedding provider has no data for a request."""


class DegenerateGeometryError(DataError):
    """A box or voxel has zero extent."""


class DegenerateInputError(DataError):
    """A vector that must be non-zero is zero or non-finite."""


class ParseError(DataError):
    """A line in an input file could not be parsed."""

    def __init__(self, path: str | Path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


# ── Internal (exit 4) ────────────────────────────────────────────────────────

class BehindCameraError(CourtFusionError):
    """A projected point has non-positive depth in the camera frame."""


class ConsistencyError(CourtFusionError):
    """An ID remap would create a duplicate ID within one frame."""


class InvariantViolation(CourtFusionError):
    """An internal post-condition did not hold."""
