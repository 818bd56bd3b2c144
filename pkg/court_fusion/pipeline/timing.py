"""Wall-clock stage timing reported per frame."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

STAGE_DETECTION_TRACKING = "detection_tracking"
STAGE_FUSION_REID = "fusion_reid"

TIMING_KEYS = (
    "detection_tracking_ms_per_frame",
    "fusion_reid_ms_per_frame",
    "total_ms_per_frame",
    "frames_per_second",
    "frames",
)


@dataclass
class TimingReport:
    """Accumulated seconds per stage plus the total wall-clock of the run."""

    frames: int = 0
    detection_tracking_s: float = 0.0
    fusion_reid_s: float = 0.0
    total_s: float = 0.0

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            attr = f"{name}_s"
            setattr(self, attr, getattr(self, attr) + elapsed)

    @contextmanager
    def total(self) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.total_s += time.perf_counter() - start

    def _per_frame_ms(self, seconds: float) -> float:
        return 1000.0 * seconds / self.frames if self.frames else 0.0

    def as_dict(self) -> dict[str, float | int]:
        return {
            "detection_tracking_ms_per_frame": self._per_frame_ms(self.detection_tracking_s),
            "fusion_reid_ms_per_frame": self._per_frame_ms(self.fusion_reid_s),
            "total_ms_per_frame": self._per_frame_ms(self.total_s),
            "frames_per_second": self.frames / self.total_s if self.total_s > 0 else 0.0,
            "frames": self.frames,
        }

    def to_lines(self) -> list[str]:
        values = self.as_dict()
        return [
            f"{key} = {values[key]}" if key == "frames" else f"{key} = {values[key]:.3f}"
            for key in TIMING_KEYS
        ]

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")
        return path
