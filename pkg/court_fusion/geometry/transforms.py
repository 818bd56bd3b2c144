"""
Point clouds, rigid transforms and multi-LiDAR integration.

Conventions
-----------
- A ``RigidTransform`` maps points from a source frame into a target frame:
  ``p_target = R @ p_source + t``.
- LiDAR extrinsics map the sensor frame into the world frame.
- World frame: court plane is z = 0, x runs along the 28 m side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import EmptyInputError, FrameError, InvalidTransformError

WORLD_FRAME = "world"

# Clouds handed to merge_clouds must agree on time within one frame period
# (10 FPS sensors).
DEFAULT_FRAME_PERIOD = 0.1

_ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PointCloud:
    """3D points in a named coordinate frame at one timestamp.

    Attributes:
        frame_id: Coordinate-frame name, e.g. ``"world"`` or a rig name.
        timestamp: Acquisition time in seconds.
        points: ``(N, 3)`` float array in meters.
    """

    frame_id: str
    timestamp: float
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not self.frame_id:
            raise FrameError("PointCloud frame_id must be non-empty")
        if not np.all(np.isfinite(pts)):
            raise FrameError(f"PointCloud '{self.frame_id}' contains non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def with_points(self, points: np.ndarray, frame_id: str | None = None) -> "PointCloud":
        return PointCloud(frame_id or self.frame_id, self.timestamp, points)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation + translation between two frames.

    The rotation must be orthonormal with determinant +1 (within 1e-9);
    anything else raises ``InvalidTransformError``.
    """

    rotation: np.ndarray
    translation: np.ndarray
    target_frame: str = WORLD_FRAME

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise InvalidTransformError("transform contains non-finite values")
        if not np.allclose(R @ R.T, np.eye(3), rtol=0.0, atol=_ORTHONORMAL_TOL):
            raise InvalidTransformError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHONORMAL_TOL:
            raise InvalidTransformError("rotation determinant is not +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls, target_frame: str = WORLD_FRAME) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3), target_frame)

    @classmethod
    def from_euler(
        cls,
        yaw_deg: float = 0.0,
        pitch_deg: float = 0.0,
        roll_deg: float = 0.0,
        translation: Sequence[float] = (0.0, 0.0, 0.0),
        target_frame: str = WORLD_FRAME,
    ) -> "RigidTransform":
        """Build ``R = Rz(yaw) @ Ry(-pitch) @ Rx(roll)``.

        Positive pitch tilts the sensor's x axis upward, so a negative pitch
        looks down at the court.
        """
        cy, sy = math.cos(math.radians(yaw_deg)), math.sin(math.radians(yaw_deg))
        cp, sp = math.cos(math.radians(-pitch_deg)), math.sin(math.radians(-pitch_deg))
        cr, sr = math.cos(math.radians(roll_deg)), math.sin(math.radians(roll_deg))
        Rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
        Ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
        Rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
        return cls(Rz @ Ry @ Rx, np.asarray(translation, dtype=np.float64), target_frame)

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return pts @ self.rotation.T + self.translation

    def inverse(self, target_frame: str = "local") -> "RigidTransform":
        R_inv = self.rotation.T
        return RigidTransform(R_inv, -R_inv @ self.translation, target_frame)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return ``self ∘ other``: apply *other* first, then *self*."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
            self.target_frame,
        )


def apply_transform(cloud: PointCloud, T: RigidTransform) -> PointCloud:
    """Map every point of *cloud* through *T*; the result is in ``T.target_frame``."""
    return PointCloud(T.target_frame, cloud.timestamp, T.apply_points(cloud.points))


def merge_clouds(
    clouds: Sequence[PointCloud],
    poses: Sequence[RigidTransform],
    frame_period: float = DEFAULT_FRAME_PERIOD,
) -> PointCloud:
    """Integrate per-LiDAR clouds into one world-frame cloud.

    ``poses[i]`` maps ``clouds[i]`` into the world frame. The output keeps
    every input point (count conservation) in input order and carries the
    earliest input timestamp.
    """
    if not clouds:
        raise EmptyInputError("merge_clouds needs at least one cloud")
    if len(clouds) != len(poses):
        raise FrameError(f"{len(clouds)} clouds but {len(poses)} poses")

    stamps = [c.timestamp for c in clouds]
    if max(stamps) - min(stamps) > frame_period:
        raise FrameError(
            f"clouds span {max(stamps) - min(stamps):.3f}s, more than one frame period "
            f"({frame_period}s)"
        )
    for pose in poses:
        if pose.target_frame != WORLD_FRAME:
            raise FrameError(f"pose targets frame '{pose.target_frame}', expected '{WORLD_FRAME}'")

    parts = [pose.apply_points(cloud.points) for cloud, pose in zip(clouds, poses)]
    return PointCloud(WORLD_FRAME, min(stamps), np.concatenate(parts, axis=0))
