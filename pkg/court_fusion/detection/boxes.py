"""
Box overlap helpers shared by BEV detection, tracking and the camera search.

All functions accept any box object with ``x, y, w, h`` (top-left corner plus
extent) and a ``confidence``: ``BevBox`` in cells, ``PixelBox`` in pixels.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Sequence, TypeVar

import numpy as np

from ..errors import ConfigurationError, DegenerateGeometryError

logger = logging.getLogger(__name__)

BoxT = TypeVar("BoxT")


def iou(a, b) -> float:
    """Intersection over union of two axis-aligned boxes."""
    area_a, area_b = a.w * a.h, b.w * b.h
    if area_a <= 0 or area_b <= 0:
        raise DegenerateGeometryError("IoU of a zero-area box is undefined")
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return float(inter / (area_a + area_b - inter))


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between ``(N, 4)`` and ``(M, 4)`` arrays of ``x, y, w, h``."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    ax0, ay0 = a[:, 0:1], a[:, 1:2]
    ax1, ay1 = ax0 + a[:, 2:3], ay0 + a[:, 3:4]
    bx0, by0 = b[:, 0], b[:, 1]
    bx1, by1 = bx0 + b[:, 2], by0 + b[:, 3]
    iw = np.clip(np.minimum(ax1, bx1) - np.maximum(ax0, bx0), 0.0, None)
    ih = np.clip(np.minimum(ay1, by1) - np.maximum(ay0, by0), 0.0, None)
    inter = iw * ih
    union = (a[:, 2:3] * a[:, 3:4]) + (b[:, 2] * b[:, 3]) - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(union > 0, inter / union, 0.0)
    return out


def union_box(boxes: Sequence[BoxT]) -> BoxT:
    """Smallest box covering all *boxes*, carrying their highest confidence."""
    x0 = min(b.x for b in boxes)
    y0 = min(b.y for b in boxes)
    x1 = max(b.x + b.w for b in boxes)
    y1 = max(b.y + b.h for b in boxes)
    conf = max(b.confidence for b in boxes)
    return dataclasses.replace(boxes[0], x=x0, y=y0, w=x1 - x0, h=y1 - y0, confidence=conf)


def suppress_duplicates(boxes, iou_threshold: float):
    """Merge overlapping boxes until no pair reaches *iou_threshold*.

    The most-overlapping pair is merged first and replaced by its union box
    (max confidence); the result is idempotent under a second call. Accepts a
    plain box sequence or a ``DetectionSet`` and returns the same kind.
    """
    if hasattr(boxes, "with_boxes"):
        return boxes.with_boxes(suppress_duplicates(boxes.boxes, iou_threshold))
    if not 0.0 < iou_threshold <= 1.0:
        raise ConfigurationError(f"iou_threshold must lie in (0, 1], got {iou_threshold}")
    out = [b for b in boxes if b.w > 0 and b.h > 0]
    merged = 0
    while len(out) > 1:
        arr = np.array([(b.x, b.y, b.w, b.h) for b in out])
        ious = iou_matrix(arr, arr)
        np.fill_diagonal(ious, -1.0)
        i, j = np.unravel_index(int(np.argmax(ious)), ious.shape)
        if ious[i, j] < iou_threshold:
            break
        i, j = min(i, j), max(i, j)
        combined = union_box([out[i], out[j]])
        out = [b for k, b in enumerate(out) if k not in (i, j)]
        out.insert(i, combined)
        merged += 1
    if merged:
        logger.debug("suppress_duplicates merged %d pair(s)", merged)
    return out
