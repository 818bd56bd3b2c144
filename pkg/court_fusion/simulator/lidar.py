"""
Analytic LiDAR sampling against cylinder bodies and the floor.

Every ray of the scan grid returns its nearest hit among the floor plane
(z = 0), the side walls and the top caps of the player cylinders, provided it
is within range. Surfaces hidden behind a nearer hit produce no return, so a
partly occluded player yields a truncated cluster.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..geometry.transforms import PointCloud
from .rigs import LidarSpec, RigSpec
from .scenario import BodyModel, Scenario

FLOOR = -1
NO_HIT = -2


@lru_cache(maxsize=8)
def scan_directions(spec: LidarSpec) -> np.ndarray:
    """Unit ray directions in the sensor frame (x forward, y left, z up), shape ``(N, 3)``."""
    az = np.radians(np.arange(-spec.h_fov_deg / 2, spec.h_fov_deg / 2 + 1e-9, spec.h_resolution_deg))
    el = np.radians(np.arange(-spec.v_fov_deg / 2, spec.v_fov_deg / 2 + 1e-9, spec.v_resolution_deg))
    A, E = np.meshgrid(az, el)
    dirs = np.stack([np.cos(E) * np.cos(A), np.cos(E) * np.sin(A), np.sin(E)], axis=-1).reshape(-1, 3)
    dirs.setflags(write=False)
    return dirs


def cast_rays(
    origin: np.ndarray,
    directions: np.ndarray,
    centers: np.ndarray,
    body: BodyModel,
    max_range: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest hit distance and hit label per ray.

    Labels are the player column index, ``FLOOR`` or ``NO_HIT`` (distance
    ``inf``).
    """
    d = np.asarray(directions, dtype=np.float64)
    o = np.asarray(origin, dtype=np.float64)
    n = d.shape[0]
    best = np.full(n, np.inf)
    label = np.full(n, NO_HIT, dtype=np.int64)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_floor = np.where(d[:, 2] < 0, -o[2] / d[:, 2], np.inf)
    hit = t_floor < best
    best[hit], label[hit] = t_floor[hit], FLOOR

    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    if len(centers):
        r, height = body.radius, body.height
        oc = o[None, :2] - centers                        # (P, 2)
        a = d[:, 0] ** 2 + d[:, 1] ** 2                   # (N,)
        b = 2.0 * (d[:, None, 0] * oc[None, :, 0] + d[:, None, 1] * oc[None, :, 1])
        c = (oc ** 2).sum(axis=1)[None, :] - r * r
        disc = b * b - 4.0 * a[:, None] * c
        with np.errstate(divide="ignore", invalid="ignore"):
            t_side = (-b - np.sqrt(np.where(disc >= 0, disc, np.nan))) / (2.0 * a[:, None])
            z_side = o[2] + t_side * d[:, None, 2]
            side_ok = (disc >= 0) & (t_side > 0) & (z_side >= 0) & (z_side <= height)
            t_side = np.where(side_ok, t_side, np.inf)

            t_cap = np.where(d[:, 2] < 0, (height - o[2]) / d[:, 2], np.inf)[:, None]
            cap_xy = o[None, None, :2] + t_cap[..., None] * d[:, None, :2]
            cap_ok = (t_cap > 0) & (((cap_xy - centers[None]) ** 2).sum(axis=-1) <= r * r)
            t_cap = np.where(cap_ok, t_cap, np.inf)

        t_body = np.minimum(t_side, t_cap)
        nearest = np.argmin(t_body, axis=1)
        t_near = t_body[np.arange(n), nearest]
        hit = t_near < best
        best[hit], label[hit] = t_near[hit], nearest[hit]

    out = best > max_range
    best[out], label[out] = np.inf, NO_HIT
    return best, label


@dataclass(frozen=True, eq=False)
class LidarReturns:
    """Sensor-frame points with the hit label of each point."""

    points: np.ndarray
    labels: np.ndarray
    timestamp: float
    frame_id: str

    def cloud(self) -> PointCloud:
        return PointCloud(self.frame_id, self.timestamp, self.points)


def lidar_returns(scenario: Scenario, rig: RigSpec, frame: int, seed: int | None = None) -> LidarReturns:
    pose = rig.lidar_pose()
    local = scan_directions(rig.lidar)
    world_dirs = local @ pose.rotation.T
    centers = scenario.positions_at(frame)
    dist, label = cast_rays(pose.translation, world_dirs, centers, scenario.cfg.body, rig.lidar.max_range)

    keep = np.isfinite(dist)
    seed = scenario.seed if seed is None else seed
    rng = np.random.default_rng([int(seed), int(frame), zlib.crc32(rig.name.encode())])
    noisy = dist[keep] + rng.normal(0.0, rig.lidar.range_noise, size=int(keep.sum()))
    points = local[keep] * noisy[:, None]
    labels = label[keep].copy()
    players = labels >= 0
    labels[players] = np.asarray(scenario.ids, dtype=np.int64)[labels[players]]
    return LidarReturns(points, labels, scenario.timestamp(frame), rig.name)


def sample_lidar(scenario: Scenario, rig: RigSpec, frame: int, seed: int | None = None) -> PointCloud:
    """One scan of *rig* at *frame*, in the rig's own frame."""
    return lidar_returns(scenario, rig, frame, seed).cloud()
