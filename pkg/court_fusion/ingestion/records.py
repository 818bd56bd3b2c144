"""
Plain record types shared by the readers, the simulator and the evaluators.

Frames are 1-based integer indices; world quantities are in meters.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator

from ..errors import DataError
from ..geometry.camera import PixelBox


@dataclass(frozen=True)
class GroundTruthBox:
    frame: int
    gt_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.cx, self.cy, self.w, self.h)):
            raise DataError(f"non-finite ground truth box for id {self.gt_id} at frame {self.frame}")

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.cx - self.w / 2, self.cy - self.h / 2, self.cx + self.w / 2, self.cy + self.h / 2)


@dataclass(frozen=True)
class CameraGtBox:
    """Ground-truth image box of one player in one camera frame."""

    frame: int
    gt_id: int
    box: PixelBox
    visibility: float


class GroundTruthSequence:
    """Per-frame ground truth, keyed by frame index.

    Frames without players are kept when listed in *frames* so sequences
    with empty stretches keep their length.
    """

    def __init__(self, boxes: Iterable[GroundTruthBox] = (), frames: Iterable[int] | None = None):
        self._by_frame: dict[int, list[GroundTruthBox]] = defaultdict(list)
        for frame in frames or ():
            self._by_frame[int(frame)]
        for box in boxes:
            self.add(box)

    def add(self, box: GroundTruthBox) -> None:
        frame_boxes = self._by_frame[box.frame]
        if any(b.gt_id == box.gt_id for b in frame_boxes):
            raise DataError(f"ground truth id {box.gt_id} appears twice in frame {box.frame}")
        frame_boxes.append(box)

    @property
    def frames(self) -> list[int]:
        return sorted(self._by_frame)

    def __getitem__(self, frame: int) -> list[GroundTruthBox]:
        return list(self._by_frame.get(frame, ()))

    def __iter__(self) -> Iterator[GroundTruthBox]:
        for frame in self.frames:
            yield from self._by_frame[frame]

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_frame.values())

    @property
    def ids(self) -> list[int]:
        return sorted({b.gt_id for b in self})
