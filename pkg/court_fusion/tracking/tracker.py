"""
Two-stage tracking-by-detection on the BEV plane.

Lifecycle rules:

- Unmatched high-confidence detections spawn tentative tracks. Tracks born on
  the first frame are active at once; later ones after ``min_hits_to_activate``
  matched frames.
- A tentative track that misses a frame is removed.
- An active track that misses a frame turns lost. A lost track can be matched
  again in stage 1 and returns under its old id; it is removed once it has
  gone more than ``max_lost_frames`` frames without an update.
- Ids are allocated in increasing order and never reused within one tracker.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from ..detection.base import DetectionSet
from ..errors import ConfigurationError, SequencingError
from ..geometry.bev import BevGrid, box_to_world
from .assignment import associate
from .kalman import BevKalmanFilter

logger = logging.getLogger(__name__)


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"


@dataclass
class TrackState:
    """One track with its filter state and lifecycle counters."""

    id: int
    mean: np.ndarray
    covariance: np.ndarray
    status: TrackStatus = TrackStatus.TENTATIVE
    age: int = 1
    hits: int = 1
    frames_since_update: int = 0
    confidence: float = 1.0

    @property
    def is_active(self) -> bool:
        return self.status is TrackStatus.ACTIVE

    @property
    def center(self) -> tuple[float, float]:
        return float(self.mean[0]), float(self.mean[1])

    @property
    def size(self) -> tuple[float, float]:
        return float(self.mean[2]), float(self.mean[3])

    @property
    def tlwh(self) -> np.ndarray:
        """Top-left ``x, y, w, h`` in meters."""
        cx, cy, w, h = self.mean[:4]
        return np.array([cx - w / 2, cy - h / 2, w, h])


@dataclass(frozen=True)
class TrackerConfig:
    high_conf_threshold: float = 0.6
    low_conf_threshold: float = 0.1
    match_threshold_stage1: float = 0.8
    match_threshold_stage2: float = 0.5
    max_lost_frames: int = 30
    min_hits_to_activate: int = 3
    std_position: float = 0.05
    std_velocity: float = 0.05
    std_measurement: float = 0.05
    size_smoothing: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.low_conf_threshold < self.high_conf_threshold <= 1.0:
            raise ConfigurationError(
                "tracker thresholds must satisfy 0 <= low_conf_threshold < high_conf_threshold <= 1"
            )
        for name in ("match_threshold_stage1", "match_threshold_stage2"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1]")
        if self.max_lost_frames < 0:
            raise ConfigurationError("max_lost_frames must be >= 0")
        if self.min_hits_to_activate < 1:
            raise ConfigurationError("min_hits_to_activate must be >= 1")


def predict(track: TrackState, kf: BevKalmanFilter | None = None) -> TrackState:
    """Return *track* advanced by one frame; the input is left untouched."""
    kf = kf or BevKalmanFilter()
    mean, covariance = kf.predict(track.mean, track.covariance)
    return dataclasses.replace(
        track,
        mean=mean,
        covariance=covariance,
        age=track.age + 1,
        frames_since_update=track.frames_since_update + 1,
    )


class BevTracker:
    """Stateful single-sequence tracker; feed frames with ``step`` in time order."""

    def __init__(self, cfg: TrackerConfig | None = None, grid: BevGrid | None = None):
        self.cfg = cfg or TrackerConfig()
        self.grid = grid or BevGrid.default()
        self.kf = BevKalmanFilter(
            self.cfg.std_position,
            self.cfg.std_velocity,
            self.cfg.std_measurement,
            self.cfg.size_smoothing,
        )
        self.tracks: list[TrackState] = []
        self.frame_count = 0
        self.removed_count = 0
        self._next_id = 1
        self._last_timestamp: float | None = None

    def _measurement(self, dets: DetectionSet, index: int) -> np.ndarray:
        x0, y0, x1, y1 = box_to_world(dets.boxes[index], self.grid)
        return np.array([(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0])

    def _spawn(self, measurement: np.ndarray, confidence: float, first_frame: bool) -> TrackState:
        mean, covariance = self.kf.initiate(measurement)
        activate_now = first_frame or self.cfg.min_hits_to_activate <= 1
        track = TrackState(
            id=self._next_id,
            mean=mean,
            covariance=covariance,
            status=TrackStatus.ACTIVE if activate_now else TrackStatus.TENTATIVE,
            confidence=confidence,
        )
        self._next_id += 1
        return track

    def step(self, dets: DetectionSet) -> list[TrackState]:
        """Process one frame and return the active tracks T_t sorted by id."""
        if self._last_timestamp is not None and dets.timestamp <= self._last_timestamp:
            raise SequencingError(
                f"frame at t={dets.timestamp} does not follow t={self._last_timestamp}"
            )
        self._last_timestamp = dets.timestamp
        first_frame = self.frame_count == 0
        self.frame_count += 1

        predicted = [predict(t, self.kf) for t in self.tracks]
        result = associate(predicted, dets, self.cfg, self.grid)

        survivors: list[TrackState] = []
        for ti, di in result.matches:
            track = predicted[ti]
            mean, covariance = self.kf.update(track.mean, track.covariance, self._measurement(dets, di))
            hits = track.hits + 1
            if track.status is TrackStatus.TENTATIVE:
                status = TrackStatus.ACTIVE if hits >= self.cfg.min_hits_to_activate else TrackStatus.TENTATIVE
            else:
                if track.status is TrackStatus.LOST:
                    logger.debug("track %d re-activated after %d frame(s)", track.id, track.frames_since_update)
                status = TrackStatus.ACTIVE
            survivors.append(dataclasses.replace(
                track,
                mean=mean,
                covariance=covariance,
                status=status,
                hits=hits,
                frames_since_update=0,
                confidence=dets.boxes[di].confidence,
            ))

        for ti in result.unmatched_tracks:
            track = predicted[ti]
            if track.status is TrackStatus.TENTATIVE:
                self.removed_count += 1
                continue
            if track.frames_since_update > self.cfg.max_lost_frames:
                logger.debug("track %d removed after %d lost frame(s)", track.id, track.frames_since_update)
                self.removed_count += 1
                continue
            survivors.append(dataclasses.replace(track, status=TrackStatus.LOST))

        for di in result.unmatched_dets:
            confidence = dets.boxes[di].confidence
            if confidence < self.cfg.high_conf_threshold:
                continue
            survivors.append(self._spawn(self._measurement(dets, di), confidence, first_frame))

        self.tracks = sorted(survivors, key=lambda t: t.id)
        return [t for t in self.tracks if t.is_active]


@dataclass(frozen=True)
class TrackRecord:
    """One line of a track file: an active track in one frame."""

    frame: int
    id: int
    cx: float
    cy: float
    w: float
    h: float


class TrackTable:
    """Per-frame track records; frames without tracks are kept explicitly."""

    def __init__(self, records: Iterable[TrackRecord] = (), frames: Iterable[int] | None = None):
        self._by_frame: dict[int, list[TrackRecord]] = defaultdict(list)
        for frame in frames or ():
            self._by_frame[int(frame)]
        for record in records:
            self._by_frame[record.frame].append(record)

    def add_frame(self, frame: int, tracks: Sequence[TrackState]) -> None:
        rows = self._by_frame[frame]
        for t in tracks:
            cx, cy = t.center
            w, h = t.size
            rows.append(TrackRecord(frame, t.id, cx, cy, w, h))

    @property
    def frames(self) -> list[int]:
        return sorted(self._by_frame)

    def __getitem__(self, frame: int) -> list[TrackRecord]:
        return list(self._by_frame.get(frame, ()))

    def __iter__(self) -> Iterator[TrackRecord]:
        for frame in self.frames:
            yield from sorted(self._by_frame[frame], key=lambda r: r.id)

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_frame.values())

    def ids_at(self, frame: int) -> set[int]:
        return {r.id for r in self._by_frame.get(frame, ())}

    @property
    def ids(self) -> list[int]:
        return sorted({r.id for r in self})

    def positions_at(self, frame: int) -> dict[int, tuple[float, float]]:
        return {r.id: (r.cx, r.cy) for r in self._by_frame.get(frame, ())}

    def record(self, frame: int, track_id: int) -> TrackRecord | None:
        for r in self._by_frame.get(frame, ()):
            if r.id == track_id:
                return r
        return None


def run_tracker(tracker: BevTracker, detection_sets: Iterable[DetectionSet]) -> TrackTable:
    """Feed *detection_sets* in order and collect every frame's active tracks."""
    table = TrackTable()
    for dets in detection_sets:
        table.add_frame(dets.frame, tracker.step(dets))
    return table
