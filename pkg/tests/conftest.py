from __future__ import annotations

import numpy as np
import pytest

from court_fusion.detection.base import DetectionSet
from court_fusion.geometry.bev import BevGrid, box_from_center
from court_fusion.ingestion.records import GroundTruthBox, GroundTruthSequence
from court_fusion.tracking.tracker import TrackRecord, TrackTable


@pytest.fixture
def grid() -> BevGrid:
    return BevGrid.default()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


def bev_dets(grid: BevGrid, frame: int, centers, conf: float = 0.9, size: float = 0.6) -> DetectionSet:
    """One ``DetectionSet`` of square player footprints centred on *centers*."""
    boxes = [box_from_center(cx, cy, size, size, grid, conf) for cx, cy in centers]
    return DetectionSet((frame - 1) * 0.1, tuple(boxes), frame)


def gt_sequence(paths: dict[int, list[tuple[float, float]]], size: float = 0.6) -> GroundTruthSequence:
    """Ground truth from ``{gt_id: [(x, y) per frame]}``; frames are 1-based."""
    boxes = [
        GroundTruthBox(f, gid, x, y, size, size)
        for gid, pts in paths.items()
        for f, (x, y) in enumerate(pts, start=1)
    ]
    frames = range(1, max(len(p) for p in paths.values()) + 1)
    return GroundTruthSequence(boxes, frames)


def track_table(paths: dict[int, list[tuple[int, float, float]]], size: float = 0.6) -> TrackTable:
    """Track table from ``{track_id: [(frame, x, y), ...]}``."""
    records = [
        TrackRecord(f, tid, x, y, size, size)
        for tid, pts in paths.items()
        for f, x, y in pts
    ]
    return TrackTable(records)
