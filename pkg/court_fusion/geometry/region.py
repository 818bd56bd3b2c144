"""Court region cropping and height filtering."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError
from .transforms import PointCloud

COURT_LENGTH = 28.0
COURT_WIDTH = 15.0

# Floor returns sit below z_min, goalpost/backboard returns above z_max.
DEFAULT_Z_RANGE = (0.2, 2.3)

_EDGE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class CourtRegion:
    """Convex XY polygon plus a height band, both boundary-inclusive."""

    xy_polygon: np.ndarray
    z_range: tuple[float, float] = DEFAULT_Z_RANGE

    def __post_init__(self):
        poly = np.asarray(self.xy_polygon, dtype=np.float64).reshape(-1, 2)
        if poly.shape[0] < 3:
            raise ConfigurationError("court polygon needs at least 3 vertices")
        area = _signed_area(poly)
        if abs(area) <= 0.0:
            raise ConfigurationError("court polygon is degenerate (zero area)")
        if area < 0:
            poly = poly[::-1].copy()
        if not _is_convex(poly):
            raise ConfigurationError("court polygon must be convex")
        z_min, z_max = (float(v) for v in self.z_range)
        if not z_min < z_max:
            raise ConfigurationError(f"z_range must satisfy z_min < z_max, got {self.z_range}")
        poly.setflags(write=False)
        object.__setattr__(self, "xy_polygon", poly)
        object.__setattr__(self, "z_range", (z_min, z_max))

        # Half-planes n . p >= c, one row per counter-clockwise edge.
        edges = np.roll(poly, -1, axis=0) - poly
        normals = np.column_stack([-edges[:, 1], edges[:, 0]])
        object.__setattr__(self, "_normals", normals)
        object.__setattr__(self, "_offsets", np.einsum("ij,ij->i", normals, poly))
        axis_aligned = bool(np.all((edges[:, 0] == 0) | (edges[:, 1] == 0)))
        object.__setattr__(self, "_bounds", (poly.min(axis=0), poly.max(axis=0)) if axis_aligned else None)

    @classmethod
    def rectangle(
        cls,
        x_min: float = 0.0,
        y_min: float = 0.0,
        x_max: float = COURT_LENGTH,
        y_max: float = COURT_WIDTH,
        z_range: Sequence[float] = DEFAULT_Z_RANGE,
    ) -> "CourtRegion":
        poly = [(x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max)]
        return cls(np.asarray(poly), tuple(z_range))

    def contains_xy(self, xy: np.ndarray) -> np.ndarray:
        """Boolean mask of points inside the polygon."""
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        if self._bounds is not None:
            lo, hi = self._bounds
            x, y = xy[:, 0], xy[:, 1]
            return (
                (x >= lo[0] - _EDGE_EPS) & (x <= hi[0] + _EDGE_EPS)
                & (y >= lo[1] - _EDGE_EPS) & (y <= hi[1] + _EDGE_EPS)
            )
        return np.all(xy @ self._normals.T - self._offsets >= -_EDGE_EPS, axis=1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        z_min, z_max = self.z_range
        z = pts[:, 2]
        inside = (z >= z_min) & (z <= z_max)
        candidates = np.flatnonzero(inside)
        inside[candidates] = self.contains_xy(pts[candidates, :2])
        return inside


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _is_convex(poly: np.ndarray) -> bool:
    e1 = np.roll(poly, -1, axis=0) - poly
    e2 = np.roll(e1, -1, axis=0)
    turn = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    return bool(np.all(turn >= -_EDGE_EPS))


def filter_region(cloud: PointCloud, region: CourtRegion) -> PointCloud:
    """Keep exactly the points inside *region*, preserving order."""
    return cloud.with_points(cloud.points[region.contains(cloud.points)])
