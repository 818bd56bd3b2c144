"""
Pinhole camera model and voxel projection.

Camera frame follows the usual computer-vision convention: x right, y down,
z forward along the optical axis. Image origin is the top-left pixel corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import BehindCameraError, ConfigurationError
from .bev import Voxel3D
from .transforms import RigidTransform

# 4K sensor with a 95° x 78° field of view.
DEFAULT_IMAGE_SIZE = (3840, 2160)
DEFAULT_FOV_DEG = (95.0, 78.0)


@dataclass(frozen=True)
class PixelBox:
    """Axis-aligned pixel box; ``(x, y)`` is the top-left corner."""

    x: float
    y: float
    w: float
    h: float
    confidence: float = 1.0

    @property
    def x1(self) -> float:
        return self.x + self.w

    @property
    def y1(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return max(self.w, 0.0) * max(self.h, 0.0)

    @classmethod
    def from_corners(cls, x0: float, y0: float, x1: float, y1: float, confidence: float = 1.0):
        return cls(x0, y0, x1 - x0, y1 - y0, confidence)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boundary-inclusive point-in-box test for ``(N, 2)`` pixels."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return (
            (pts[:, 0] >= self.x) & (pts[:, 0] <= self.x1)
            & (pts[:, 1] >= self.y) & (pts[:, 1] <= self.y1)
        )


@dataclass(frozen=True, eq=False)
class ProjectedBox:
    """Result of projecting a voxel into one camera.

    Attributes:
        box: Bounding box of the projected corners clamped to the image, or
            ``None`` when it falls entirely outside.
        unclamped: Bounding box before clamping.
        corners: ``(8, 2)`` projected corner pixels (unclamped).
    """

    box: PixelBox | None
    unclamped: PixelBox
    corners: np.ndarray

    @property
    def unclamped_area(self) -> float:
        return self.unclamped.area

    @property
    def visible(self) -> bool:
        return self.box is not None and self.box.area > 0


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Intrinsics, world→camera extrinsics and image size."""

    intrinsics: np.ndarray
    extrinsics: RigidTransform
    image_size: tuple[int, int] = DEFAULT_IMAGE_SIZE
    name: str = "camera"

    def __post_init__(self):
        K = np.asarray(self.intrinsics, dtype=np.float64).reshape(3, 3)
        width, height = int(self.image_size[0]), int(self.image_size[1])
        if K[0, 0] <= 0 or K[1, 1] <= 0:
            raise ConfigurationError(f"camera '{self.name}' focal lengths must be positive")
        if not (0 <= K[0, 2] <= width and 0 <= K[1, 2] <= height):
            raise ConfigurationError(f"camera '{self.name}' principal point lies outside the image")
        K.setflags(write=False)
        object.__setattr__(self, "intrinsics", K)
        object.__setattr__(self, "image_size", (width, height))

    @classmethod
    def from_fov(
        cls,
        position: Sequence[float],
        yaw_deg: float,
        pitch_deg: float,
        image_size: Sequence[int] = DEFAULT_IMAGE_SIZE,
        fov_deg: Sequence[float] = DEFAULT_FOV_DEG,
        name: str = "camera",
    ) -> "CameraModel":
        """Camera at *position* looking along (*yaw*, *pitch*) with a centred principal point."""
        width, height = int(image_size[0]), int(image_size[1])
        fx = (width / 2.0) / math.tan(math.radians(fov_deg[0]) / 2.0)
        fy = (height / 2.0) / math.tan(math.radians(fov_deg[1]) / 2.0)
        K = np.array([[fx, 0.0, width / 2.0], [0.0, fy, height / 2.0], [0.0, 0.0, 1.0]])
        return cls(K, look_at_extrinsics(position, yaw_deg, pitch_deg, name), (width, height), name)

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        return self.extrinsics.apply_points(points)

    def project_points(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(pixels, depth)`` for world points; pixels are NaN where depth <= 0."""
        cam = self.to_camera(points)
        depth = cam[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            uvw = cam @ self.intrinsics.T
            pixels = uvw[:, :2] / uvw[:, 2:3]
        pixels[depth <= 0] = np.nan
        return pixels, depth

    def clamp(self, box: PixelBox) -> PixelBox | None:
        width, height = self.image_size
        x0, y0 = min(max(box.x, 0.0), width), min(max(box.y, 0.0), height)
        x1, y1 = min(max(box.x1, 0.0), width), min(max(box.y1, 0.0), height)
        if x1 <= x0 or y1 <= y0:
            return None
        return PixelBox.from_corners(x0, y0, x1, y1, box.confidence)


def look_at_extrinsics(
    position: Sequence[float],
    yaw_deg: float,
    pitch_deg: float,
    name: str = "camera",
) -> RigidTransform:
    """World→camera transform for a camera at *position* with the given heading.

    Yaw is measured from the world x axis toward y; negative pitch looks down.
    Pitch must lie strictly inside (-90, 90) so the image x axis stays defined.
    """
    if not -90.0 < pitch_deg < 90.0:
        raise ConfigurationError(f"camera '{name}' pitch must lie in (-90, 90) degrees, got {pitch_deg}")
    yaw, pitch = math.radians(yaw_deg), math.radians(pitch_deg)
    forward = np.array([math.cos(pitch) * math.cos(yaw), math.cos(pitch) * math.sin(yaw), math.sin(pitch)])
    right = np.cross(forward, [0.0, 0.0, 1.0])
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.vstack([right, down, forward])
    C = np.asarray(position, dtype=np.float64)
    return RigidTransform(R, -R @ C, target_frame=name)


def project(voxel: Voxel3D, cam: CameraModel) -> ProjectedBox:
    """Perspective-project the 8 voxel corners and box them.

    Raises ``BehindCameraError`` if any corner has non-positive depth.
    """
    pixels, depth = cam.project_points(voxel.corners)
    if np.any(depth <= 0):
        raise BehindCameraError(f"voxel corner behind camera '{cam.name}'")
    x0, y0 = pixels.min(axis=0)
    x1, y1 = pixels.max(axis=0)
    unclamped = PixelBox.from_corners(float(x0), float(y0), float(x1), float(y1))
    return ProjectedBox(cam.clamp(unclamped), unclamped, pixels)
