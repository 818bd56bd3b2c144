"""
Ground-truth oracle detectors.

``OracleDetector`` perturbs ground-truth BEV footprints with a simple noise
model; ``CameraOracleDetector`` applies the same model to rendered camera
ground truth in pixel units. Both are deterministic given ``(seed, frame)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from ..errors import ConfigurationError
from ..geometry.bev import BevGrid, box_from_world
from ..geometry.camera import PixelBox
from ..geometry.region import COURT_LENGTH, COURT_WIDTH
from ..ingestion.records import GroundTruthBox
from .base import UNKNOWN_ID, DetectionSet, DetectorBase, DetectorFrame
from .boxes import iou_matrix

logger = logging.getLogger(__name__)

# Merged detections sit below the tracker's high-confidence threshold.
MERGED_CONFIDENCE = 0.4


@dataclass(frozen=True)
class OracleNoiseModel:
    """Perturbations applied to ground truth before it reaches the tracker.

    Attributes:
        position_sigma: Std-dev of the box-centre offset (meters; pixels are
            derived per box for camera detections).
        size_jitter: Relative std-dev of box width and height.
        miss_rate: Probability an unmerged player produces no detection.
        false_positive_rate: Expected spurious detections per frame (Poisson).
        merge_distance: Players whose centres are closer than this (meters)
            collapse into one detection covering the union footprint.
        clean_confidence: Confidence of a regular detection.
        merged_confidence: Confidence of a merged detection.
        false_positive_confidence: Confidence of a spurious detection.
        false_positive_size: Side length of a spurious box (meters).
    """

    position_sigma: float = 0.0
    size_jitter: float = 0.0
    miss_rate: float = 0.0
    false_positive_rate: float = 0.0
    merge_distance: float = 0.0
    clean_confidence: float = 0.9
    merged_confidence: float = MERGED_CONFIDENCE
    false_positive_confidence: float = 0.3
    false_positive_size: float = 0.8

    def __post_init__(self):
        if self.position_sigma < 0 or self.size_jitter < 0:
            raise ConfigurationError("noise standard deviations must be >= 0")
        if not 0.0 <= self.miss_rate < 1.0:
            raise ConfigurationError(f"miss_rate must lie in [0, 1), got {self.miss_rate}")
        if self.false_positive_rate < 0:
            raise ConfigurationError("false_positive_rate must be >= 0")
        if self.merge_distance < 0:
            raise ConfigurationError("merge_distance must be >= 0")
        for name in ("clean_confidence", "merged_confidence", "false_positive_confidence"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        if self.false_positive_size <= 0:
            raise ConfigurationError("false_positive_size must be > 0")


def frame_rng(seed: int, frame: int) -> np.random.Generator:
    """Independent generator per ``(seed, frame)`` so frames can be processed in any order."""
    return np.random.default_rng([int(seed), int(frame)])


def merge_groups(centers: np.ndarray, merge_distance: float) -> list[list[int]]:
    """Indices grouped by transitive proximity (< *merge_distance*), in first-index order."""
    n = len(centers)
    if n == 0:
        return []
    if merge_distance <= 0 or n == 1:
        return [[i] for i in range(n)]
    adjacency = cdist(centers, centers) < merge_distance
    _, labels = connected_components(adjacency, directed=False)
    groups: dict[int, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(int(label), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def perturb_players(
    players: Sequence[GroundTruthBox],
    noise: OracleNoiseModel,
    rng: np.random.Generator,
    fp_bounds: Sequence[float] = (0.0, 0.0, COURT_LENGTH, COURT_WIDTH),
) -> list[tuple[tuple[float, float, float, float], float, int]]:
    """Noisy world footprints ``(bounds, confidence, id_hint)`` for one frame."""
    out = []
    centers = np.array([(p.cx, p.cy) for p in players]).reshape(-1, 2)
    for group in merge_groups(centers, noise.merge_distance):
        members = [players[i] for i in group]
        if len(members) > 1:
            x0 = min(p.bounds[0] for p in members)
            y0 = min(p.bounds[1] for p in members)
            x1 = max(p.bounds[2] for p in members)
            y1 = max(p.bounds[3] for p in members)
            dx, dy = rng.normal(0.0, noise.position_sigma, size=2)
            out.append(((x0 + dx, y0 + dy, x1 + dx, y1 + dy), noise.merged_confidence, UNKNOWN_ID))
            continue

        player = members[0]
        if rng.random() < noise.miss_rate:
            continue
        dx, dy = rng.normal(0.0, noise.position_sigma, size=2)
        jw, jh = rng.normal(0.0, noise.size_jitter, size=2)
        w = player.w * max(1.0 + jw, 0.1)
        h = player.h * max(1.0 + jh, 0.1)
        cx, cy = player.cx + dx, player.cy + dy
        out.append(((cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2), noise.clean_confidence, player.gt_id))

    for _ in range(rng.poisson(noise.false_positive_rate) if noise.false_positive_rate > 0 else 0):
        cx = rng.uniform(fp_bounds[0], fp_bounds[2])
        cy = rng.uniform(fp_bounds[1], fp_bounds[3])
        half = noise.false_positive_size / 2
        out.append(((cx - half, cy - half, cx + half, cy + half), noise.false_positive_confidence, UNKNOWN_ID))
    return out


class OracleDetector(DetectorBase):
    """BEV detector that reads ground truth instead of the count image."""

    def __init__(self, noise: OracleNoiseModel | None = None, seed: int = 0, grid: BevGrid | None = None):
        super().__init__(grid)
        self.noise = noise or OracleNoiseModel()
        self.seed = seed

    def detect(self, frame: DetectorFrame) -> DetectionSet:
        rng = frame_rng(self.seed, frame.index)
        boxes, hints = [], []
        for bounds, confidence, hint in perturb_players(list(frame.players), self.noise, rng):
            box = box_from_world(bounds, self.grid, confidence)
            if box is not None:
                boxes.append(box)
                hints.append(hint)
        dets = DetectionSet(frame.timestamp, tuple(boxes), frame.index, tuple(hints))
        logger.debug(self.describe(dets))
        return dets


@dataclass(frozen=True)
class CameraNoiseModel:
    """Camera-side variant of the oracle noise model.

    Attributes:
        noise: Shared perturbation parameters; ``position_sigma`` is in meters
            and converted to pixels with each box's pixels-per-meter.
        min_visibility: Players less visible than this are not detected.
        merge_iou: Boxes overlapping at least this much merge into one.
        body_height: Player height used for the pixels-per-meter estimate.
    """

    noise: OracleNoiseModel = field(default_factory=OracleNoiseModel)
    min_visibility: float = 0.3
    merge_iou: float = 0.7
    body_height: float = 1.9

    def __post_init__(self):
        if not 0.0 <= self.min_visibility <= 1.0:
            raise ConfigurationError("min_visibility must lie in [0, 1]")
        if not 0.0 < self.merge_iou <= 1.0:
            raise ConfigurationError("merge_iou must lie in (0, 1]")
        if self.body_height <= 0:
            raise ConfigurationError("body_height must be > 0")


class CameraOracleDetector(DetectorBase):
    """Image-space person detector simulated from camera ground truth."""

    def __init__(
        self,
        model: CameraNoiseModel | None = None,
        seed: int = 0,
        image_size: Sequence[int] = (3840, 2160),
        camera_index: int = 0,
    ):
        super().__init__()
        self.model = model or CameraNoiseModel()
        self.seed = seed
        self.image_size = (int(image_size[0]), int(image_size[1]))
        self.camera_index = camera_index

    def detect(self, frame: DetectorFrame) -> DetectionSet:
        noise = self.model.noise
        rng = np.random.default_rng([int(self.seed), int(frame.index), 1000 + self.camera_index])
        visible = [c for c in frame.camera_boxes if c.visibility >= self.model.min_visibility]

        boxes: list[PixelBox] = []
        hints: list[int] = []
        for gt in visible:
            if rng.random() < noise.miss_rate:
                continue
            px_per_m = gt.box.h / self.model.body_height
            dx, dy = rng.normal(0.0, noise.position_sigma * px_per_m, size=2)
            jw, jh = rng.normal(0.0, noise.size_jitter, size=2)
            w = gt.box.w * max(1.0 + jw, 0.1)
            h = gt.box.h * max(1.0 + jh, 0.1)
            cx = gt.box.x + gt.box.w / 2 + dx
            cy = gt.box.y + gt.box.h / 2 + dy
            boxes.append(PixelBox(cx - w / 2, cy - h / 2, w, h, noise.clean_confidence))
            hints.append(gt.gt_id)

        boxes, hints = self._merge(boxes, hints)
        clamped = [(self._clamp(b), hint) for b, hint in zip(boxes, hints)]
        clamped = [(b, hint) for b, hint in clamped if b is not None]
        dets = DetectionSet(
            frame.timestamp,
            tuple(b for b, _ in clamped),
            frame.index,
            tuple(hint for _, hint in clamped),
        )
        logger.debug("camera %d %s", self.camera_index, self.describe(dets))
        return dets

    def _merge(self, boxes: list[PixelBox], hints: list[int]) -> tuple[list[PixelBox], list[int]]:
        """Collapse boxes overlapping by at least ``merge_iou`` into union boxes."""
        if len(boxes) < 2:
            return boxes, hints
        arr = np.array([(b.x, b.y, b.w, b.h) for b in boxes])
        _, labels = connected_components(iou_matrix(arr, arr) >= self.model.merge_iou, directed=False)
        merged_boxes, merged_hints = [], []
        for label in sorted(set(labels.tolist()), key=lambda lab: int(np.argmax(labels == lab))):
            idx = np.flatnonzero(labels == label)
            if len(idx) == 1:
                merged_boxes.append(boxes[idx[0]])
                merged_hints.append(hints[idx[0]])
                continue
            group = [boxes[i] for i in idx]
            x0, y0 = min(b.x for b in group), min(b.y for b in group)
            x1, y1 = max(b.x1 for b in group), max(b.y1 for b in group)
            merged_boxes.append(
                PixelBox.from_corners(x0, y0, x1, y1, self.model.noise.merged_confidence)
            )
            merged_hints.append(UNKNOWN_ID)
        return merged_boxes, merged_hints

    def _clamp(self, box: PixelBox) -> PixelBox | None:
        width, height = self.image_size
        x0, y0 = max(box.x, 0.0), max(box.y, 0.0)
        x1, y1 = min(box.x1, float(width)), min(box.y1, float(height))
        if x1 <= x0 or y1 <= y0:
            return None
        return PixelBox.from_corners(x0, y0, x1, y1, box.confidence)
