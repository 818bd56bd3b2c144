"""Detector that replays detections produced elsewhere (e.g. a neural detector)."""

from __future__ import annotations

import logging
from pathlib import Path

from ..geometry.bev import BevGrid
from ..ingestion.formats import read_detections
from .base import DetectionSet, DetectorBase, DetectorFrame

logger = logging.getLogger(__name__)


class ReplayDetector(DetectorBase):
    """Serves detections from a replay file; frames absent from it are empty."""

    def __init__(
        self,
        source: str | Path | dict[int, DetectionSet],
        unit: str = "bev",
        grid: BevGrid | None = None,
    ):
        super().__init__(grid)
        if isinstance(source, dict):
            self.sets = dict(source)
            self.path = None
        else:
            self.path = Path(source)
            self.sets = read_detections(self.path, unit)
            logger.info("loaded %d detection frame(s) from %s", len(self.sets), self.path)
        self.unit = unit

    def detect(self, frame: DetectorFrame) -> DetectionSet:
        stored = self.sets.get(frame.index)
        if stored is None:
            return self.empty(frame)
        if degenerate := [b for b in stored.boxes if b.w <= 0 or b.h <= 0]:
            logger.warning("frame %d: dropping %d zero-area replay box(es)", frame.index, len(degenerate))
        boxes = [b for b in stored.boxes if b.w > 0 and b.h > 0]
        hints = [h for b, h in zip(stored.boxes, stored.id_hints) if b.w > 0 and b.h > 0]
        if self.unit == "bev":
            kept = [(self._clip_one(b), h) for b, h in zip(boxes, hints)]
            kept = [(b, h) for b, h in kept if b is not None]
            boxes, hints = [b for b, _ in kept], [h for _, h in kept]
        return DetectionSet(frame.timestamp, tuple(boxes), frame.index, tuple(hints))

    def _clip_one(self, box):
        clipped = self.clip([box])
        return clipped[0] if clipped else None
