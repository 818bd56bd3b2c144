"""
Camera ground truth: image box and visibility of every player.

The image box bounds the projected rims of the body cylinder. Visibility is
the fraction of the (clamped) box not covered by the union of the boxes of
players nearer to the camera.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..geometry.camera import CameraModel, PixelBox
from ..ingestion.records import CameraGtBox
from .scenario import BodyModel, Scenario

_RIM_SAMPLES = 32


def cylinder_image_box(center: Sequence[float], body: BodyModel, camera: CameraModel) -> PixelBox | None:
    """Unclamped image box of one body, or ``None`` if any rim point is behind the camera."""
    angles = np.linspace(0.0, 2.0 * np.pi, _RIM_SAMPLES, endpoint=False)
    ring = np.stack([
        center[0] + body.radius * np.cos(angles),
        center[1] + body.radius * np.sin(angles),
    ], axis=1)
    rims = np.concatenate([
        np.column_stack([ring, np.zeros(_RIM_SAMPLES)]),
        np.column_stack([ring, np.full(_RIM_SAMPLES, body.height)]),
    ])
    pixels, depth = camera.project_points(rims)
    if np.any(depth <= 0):
        return None
    x0, y0 = pixels.min(axis=0)
    x1, y1 = pixels.max(axis=0)
    return PixelBox.from_corners(float(x0), float(y0), float(x1), float(y1))


def union_area(boxes: Sequence[PixelBox]) -> float:
    """Exact area of a union of axis-aligned boxes (coordinate compression)."""
    boxes = [b for b in boxes if b.w > 0 and b.h > 0]
    if not boxes:
        return 0.0
    xs = np.unique([v for b in boxes for v in (b.x, b.x1)])
    ys = np.unique([v for b in boxes for v in (b.y, b.y1)])
    covered = np.zeros((len(ys) - 1, len(xs) - 1), dtype=bool)
    for b in boxes:
        i0, i1 = np.searchsorted(ys, [b.y, b.y1])
        j0, j1 = np.searchsorted(xs, [b.x, b.x1])
        covered[i0:i1, j0:j1] = True
    cell = np.outer(np.diff(ys), np.diff(xs))
    return float(cell[covered].sum())


def visible_fraction(box: PixelBox, occluders: Sequence[PixelBox]) -> float:
    if box.area <= 0:
        return 0.0
    clipped = []
    for o in occluders:
        x0, y0 = max(o.x, box.x), max(o.y, box.y)
        x1, y1 = min(o.x1, box.x1), min(o.y1, box.y1)
        if x1 > x0 and y1 > y0:
            clipped.append(PixelBox.from_corners(x0, y0, x1, y1))
    return float(np.clip(1.0 - union_area(clipped) / box.area, 0.0, 1.0))


def render_camera_gt(scenario: Scenario, camera: CameraModel, frame: int) -> list[CameraGtBox]:
    """Ground-truth boxes of the players in view, sorted by id."""
    body = scenario.cfg.body
    centre = -camera.extrinsics.rotation.T @ camera.extrinsics.translation
    in_view = []
    for gid, (x, y) in zip(scenario.ids, scenario.positions_at(frame)):
        raw = cylinder_image_box((x, y), body, camera)
        if raw is None:
            continue
        box = camera.clamp(raw)
        if box is None:
            continue
        depth = float(np.hypot(x - centre[0], y - centre[1]))
        in_view.append((depth, gid, box))

    out = []
    for depth, gid, box in in_view:
        nearer = [b for d, g, b in in_view if d < depth]
        out.append(CameraGtBox(frame, gid, box, visible_fraction(box, nearer)))
    return sorted(out, key=lambda c: c.gt_id)
