"""Sensor rigs: a LiDAR and a camera sharing one mount."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import ConfigurationError
from ..geometry.camera import DEFAULT_FOV_DEG, DEFAULT_IMAGE_SIZE, CameraModel
from ..geometry.region import COURT_LENGTH, COURT_WIDTH
from ..geometry.transforms import RigidTransform


@dataclass(frozen=True)
class LidarSpec:
    """Scan pattern of one LiDAR (angles in degrees, distances in meters)."""

    h_resolution_deg: float = 0.18
    v_resolution_deg: float = 0.23
    h_fov_deg: float = 125.0
    v_fov_deg: float = 25.0
    max_range: float = 40.0
    range_noise: float = 0.02

    def __post_init__(self):
        for name in ("h_resolution_deg", "v_resolution_deg", "h_fov_deg", "v_fov_deg", "max_range"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"lidar {name} must be > 0")
        if self.range_noise < 0:
            raise ConfigurationError("lidar range_noise must be >= 0")


@dataclass(frozen=True)
class CameraSpec:
    image_size: tuple[int, int] = DEFAULT_IMAGE_SIZE
    fov_deg: tuple[float, float] = DEFAULT_FOV_DEG

    def __post_init__(self):
        if min(self.image_size) <= 0:
            raise ConfigurationError("camera image_size must be positive")
        if not all(0 < f < 180 for f in self.fov_deg):
            raise ConfigurationError("camera fov_deg must lie in (0, 180)")


@dataclass(frozen=True)
class RigSpec:
    """Mount pose plus both sensor specs.

    Yaw is measured from the world x axis toward y; negative pitch looks
    down at the court.
    """

    name: str
    position: tuple[float, float, float]
    yaw_deg: float
    lidar_pitch_deg: float = -5.0
    camera_pitch_deg: float = -10.0
    lidar: LidarSpec = field(default_factory=LidarSpec)
    camera: CameraSpec = field(default_factory=CameraSpec)

    def __post_init__(self):
        if not self.name:
            raise ConfigurationError("rig name must be non-empty")
        if len(self.position) != 3 or self.position[2] <= 0:
            raise ConfigurationError(f"rig '{self.name}' needs a 3D position above the floor")
        if not -90.0 < self.camera_pitch_deg < 90.0:
            raise ConfigurationError(f"rig '{self.name}' camera_pitch_deg must lie in (-90, 90)")

    def lidar_pose(self) -> RigidTransform:
        """Sensor → world transform of the LiDAR."""
        return RigidTransform.from_euler(self.yaw_deg, self.lidar_pitch_deg, 0.0, self.position)

    def camera_model(self) -> CameraModel:
        return CameraModel.from_fov(
            self.position, self.yaw_deg, self.camera_pitch_deg,
            self.camera.image_size, self.camera.fov_deg, self.name,
        )


def default_rigs(lidar: LidarSpec | None = None, camera: CameraSpec | None = None) -> tuple[RigSpec, ...]:
    """Both mid-sidelines plus one baseline corner, 2 m up, all aimed into the court."""
    lidar = lidar or LidarSpec()
    camera = camera or CameraSpec()
    cx, cy = COURT_LENGTH / 2, COURT_WIDTH / 2
    corner = (-1.5, -1.5, 2.0)
    corner_yaw = math.degrees(math.atan2(cy - corner[1], cx - corner[0]))
    return (
        RigSpec("rig1", (cx, -1.5, 2.0), 90.0, lidar=lidar, camera=camera),
        RigSpec("rig2", (cx, COURT_WIDTH + 1.5, 2.0), -90.0, lidar=lidar, camera=camera),
        RigSpec("rig3", corner, corner_yaw, lidar=lidar, camera=camera),
    )
