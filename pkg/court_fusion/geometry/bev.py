"""
Bird's-eye-view grid, BEV boxes, rasterization and voxelization.

Cell ``(col, row)`` covers world ``[ox + col*res, ox + (col+1)*res) x
[oy + row*res, oy + (row+1)*res)``. BEV images are indexed ``image[row, col]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, DataError, DegenerateGeometryError
from .transforms import PointCloud

DEFAULT_RESOLUTION = 0.05
# Court plus a 1 m margin on every side.
DEFAULT_EXTENT = (30.0, 17.0)
DEFAULT_ORIGIN = (-1.0, -1.0)


@dataclass(frozen=True)
class BevGrid:
    origin: tuple[float, float] = DEFAULT_ORIGIN
    resolution: float = DEFAULT_RESOLUTION
    width: int = int(round(DEFAULT_EXTENT[0] / DEFAULT_RESOLUTION))
    height: int = int(round(DEFAULT_EXTENT[1] / DEFAULT_RESOLUTION))

    def __post_init__(self):
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise ConfigurationError(f"BEV resolution must be > 0, got {self.resolution}")
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError(f"BEV grid must be non-empty, got {self.width}x{self.height}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def covering(
        cls,
        extent: Sequence[float] = DEFAULT_EXTENT,
        resolution: float = DEFAULT_RESOLUTION,
        origin: Sequence[float] = DEFAULT_ORIGIN,
    ) -> "BevGrid":
        if resolution <= 0:
            raise ConfigurationError(f"BEV resolution must be > 0, got {resolution}")
        return cls(
            (origin[0], origin[1]),
            resolution,
            int(round(extent[0] / resolution)),
            int(round(extent[1] / resolution)),
        )

    @classmethod
    def default(cls) -> "BevGrid":
        return cls()

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def world_to_cell(self, xy: np.ndarray) -> np.ndarray:
        """Integer ``(col, row)`` of each world ``(x, y)``; not clipped to the grid."""
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        return np.floor((xy - np.asarray(self.origin)) / self.resolution).astype(np.int64)

    def cell_to_world(self, cells: np.ndarray) -> np.ndarray:
        """World ``(x, y)`` of the lower corner of each cell."""
        cells = np.asarray(cells, dtype=np.float64).reshape(-1, 2)
        return cells * self.resolution + np.asarray(self.origin)

    def in_grid(self, cells: np.ndarray) -> np.ndarray:
        cells = np.asarray(cells).reshape(-1, 2)
        return (
            (cells[:, 0] >= 0) & (cells[:, 0] < self.width)
            & (cells[:, 1] >= 0) & (cells[:, 1] < self.height)
        )


@dataclass(frozen=True)
class BevBox:
    """Axis-aligned box in grid cells; ``(x, y)`` is the minimum corner."""

    x: float
    y: float
    w: float
    h: float
    confidence: float = 1.0

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise DegenerateGeometryError(f"negative box extent {self.w}x{self.h}")
        if not 0.0 <= self.confidence <= 1.0:
            raise DataError(f"confidence must lie in [0, 1], got {self.confidence}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0


def box_to_world(box: BevBox, grid: BevGrid) -> tuple[float, float, float, float]:
    """World footprint ``(x_min, y_min, x_max, y_max)`` in meters."""
    ox, oy = grid.origin
    r = grid.resolution
    return (ox + box.x * r, oy + box.y * r, ox + (box.x + box.w) * r, oy + (box.y + box.h) * r)


def box_from_world(
    bounds: Sequence[float],
    grid: BevGrid,
    confidence: float = 1.0,
) -> BevBox | None:
    """Quantize a world footprint to cell edges and clamp it to the grid.

    Returns ``None`` when nothing of the footprint remains inside the grid.
    """
    ox, oy = grid.origin
    r = grid.resolution
    x0 = int(round((bounds[0] - ox) / r))
    y0 = int(round((bounds[1] - oy) / r))
    x1 = int(round((bounds[2] - ox) / r))
    y1 = int(round((bounds[3] - oy) / r))
    x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
    return clamp_box(BevBox(x0, y0, x1 - x0, y1 - y0, confidence), grid)


def box_from_center(
    cx: float,
    cy: float,
    w: float,
    h: float,
    grid: BevGrid,
    confidence: float = 1.0,
) -> BevBox | None:
    """Cell-quantized box for a world footprint given by centre and size."""
    return box_from_world((cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0), grid, confidence)


def clamp_box(box: BevBox, grid: BevGrid) -> BevBox | None:
    x0 = min(max(box.x, 0), grid.width)
    y0 = min(max(box.y, 0), grid.height)
    x1 = min(max(box.x + box.w, 0), grid.width)
    y1 = min(max(box.y + box.h, 0), grid.height)
    if x1 <= x0 or y1 <= y0:
        return None
    return BevBox(x0, y0, x1 - x0, y1 - y0, box.confidence)


def rasterize_bev(cloud: PointCloud, grid: BevGrid) -> np.ndarray:
    """Per-cell point counts of *cloud* (z discarded); shape ``(height, width)``."""
    if not isinstance(grid, BevGrid):
        raise ConfigurationError("rasterize_bev needs a BevGrid")
    if len(cloud) == 0:
        return np.zeros(grid.shape, dtype=np.int64)
    pts = cloud.points
    col = np.floor((pts[:, 0] - grid.origin[0]) / grid.resolution)
    row = np.floor((pts[:, 1] - grid.origin[1]) / grid.resolution)
    keep = (col >= 0) & (col < grid.width) & (row >= 0) & (row < grid.height)
    flat = row[keep].astype(np.int64) * grid.width + col[keep].astype(np.int64)
    counts = np.bincount(flat, minlength=grid.width * grid.height)
    return counts.reshape(grid.shape)


@dataclass(frozen=True, eq=False)
class Voxel3D:
    """Axis-aligned 3D box given by its 8 corners in world meters.

    Corner order: the footprint corners ``(x0,y0) (x1,y0) (x0,y1) (x1,y1)`` at
    ``z_min`` followed by the same four at ``z_max``.
    """

    corners: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.corners, dtype=np.float64)
        if c.shape != (8, 3):
            raise DegenerateGeometryError(f"a voxel has exactly 8 corners, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "corners", c)

    @classmethod
    def from_bounds(
        cls,
        x_min: float,
        y_min: float,
        x_max: float,
        y_max: float,
        z_range: Sequence[float],
    ) -> "Voxel3D":
        z_min, z_max = float(z_range[0]), float(z_range[1])
        if not (x_max > x_min and y_max > y_min):
            raise DegenerateGeometryError("voxel footprint has zero extent")
        if not z_max > z_min:
            raise DegenerateGeometryError(f"voxel height range is empty: {z_range}")
        footprint = [(x_min, y_min), (x_max, y_min), (x_min, y_max), (x_max, y_max)]
        corners = [(x, y, z) for z in (z_min, z_max) for x, y in footprint]
        return cls(np.asarray(corners))

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.corners.min(axis=0), self.corners.max(axis=0)


def voxelize(box: BevBox, grid: BevGrid, z_range: Sequence[float]) -> Voxel3D:
    """Extrude a BEV box through ``[z_min, z_max]``."""
    if box.w <= 0 or box.h <= 0:
        raise DegenerateGeometryError(f"cannot voxelize a {box.w}x{box.h} box")
    x0, y0, x1, y1 = box_to_world(box, grid)
    return Voxel3D.from_bounds(x0, y0, x1, y1, z_range)
