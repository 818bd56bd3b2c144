from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DataError
from ..geometry.bev import BevBox, BevGrid, box_to_world, clamp_box
from ..ingestion.records import CameraGtBox, GroundTruthBox

logger = logging.getLogger(__name__)

UNKNOWN_ID = -1


@dataclass(frozen=True)
class DetectionSet:
    """Detections of one frame.

    ``boxes`` are ``BevBox`` (cells) for LiDAR detectors and ``PixelBox`` for
    camera detectors. ``id_hints`` runs parallel to ``boxes``; ``-1`` marks an
    unknown identity.
    """

    timestamp: float
    boxes: tuple = ()
    frame: int = 0
    id_hints: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        hints = tuple(int(h) for h in self.id_hints) or (UNKNOWN_ID,) * len(self.boxes)
        if len(hints) != len(self.boxes):
            raise DataError(f"{len(hints)} id hints for {len(self.boxes)} boxes")
        for box in self.boxes:
            if not 0.0 <= box.confidence <= 1.0:
                raise DataError(f"detection confidence {box.confidence} outside [0, 1]")
        object.__setattr__(self, "id_hints", hints)

    def __len__(self) -> int:
        return len(self.boxes)

    def with_boxes(self, boxes: Sequence, id_hints: Sequence[int] = ()) -> "DetectionSet":
        return DetectionSet(self.timestamp, tuple(boxes), self.frame, tuple(id_hints))

    def world_boxes(self, grid: BevGrid) -> np.ndarray:
        """``(N, 4)`` top-left ``x, y, w, h`` in meters for BEV detections."""
        out = np.zeros((len(self.boxes), 4))
        for i, box in enumerate(self.boxes):
            x0, y0, x1, y1 = box_to_world(box, grid)
            out[i] = (x0, y0, x1 - x0, y1 - y0)
        return out

    @property
    def confidences(self) -> np.ndarray:
        return np.array([b.confidence for b in self.boxes], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class DetectorFrame:
    """Everything a detector may look at for one frame.

    Detectors read only the fields they need: the BEV count image, the
    ground-truth BEV boxes or the ground-truth boxes of one camera.
    """

    index: int
    timestamp: float
    bev: np.ndarray | None = None
    players: Sequence[GroundTruthBox] = field(default_factory=tuple)
    camera_boxes: Sequence[CameraGtBox] = field(default_factory=tuple)


class DetectorBase(ABC):
    """Common plumbing for the pluggable detectors."""

    def __init__(self, grid: BevGrid | None = None):
        self.grid = grid or BevGrid.default()

    @staticmethod
    def empty(frame: DetectorFrame) -> DetectionSet:
        return DetectionSet(frame.timestamp, (), frame.index)

    @staticmethod
    def describe(dets: DetectionSet) -> str:
        """One-line summary used in debug logs."""
        if not len(dets):
            return f"frame {dets.frame}: no detections"
        conf = dets.confidences
        return (
            f"frame {dets.frame}: {len(dets)} detection(s), "
            f"confidence {conf.min():.2f}-{conf.max():.2f}"
        )

    def clip(self, boxes: Sequence[BevBox]) -> list[BevBox]:
        """Drop boxes that fall outside the grid after clamping."""
        kept = [clamp_box(b, self.grid) for b in boxes]
        return [b for b in kept if b is not None]

    @abstractmethod
    def detect(self, frame: DetectorFrame) -> DetectionSet:
        """Return the detections for *frame*."""
