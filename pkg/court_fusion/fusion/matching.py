"""
Camera search and frame selection around occlusion boundaries.

For a track id near an occlusion, pick the camera in which its voxel is least
covered by the other players' projections, check that exactly one image
detection explains the projected box, and walk frames backward or forward
until such a clear view turns up.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..detection.base import DetectionSet
from ..detection.boxes import iou
from ..errors import BehindCameraError, ConfigurationError
from ..geometry.bev import BevBox, BevGrid, box_from_center, voxelize
from ..geometry.camera import CameraModel, PixelBox, ProjectedBox, project
from ..tracking.tracker import TrackTable

logger = logging.getLogger(__name__)

BACKWARD = "backward"
FORWARD = "forward"
_CORNERS = 8


@dataclass(frozen=True)
class SearchConfig:
    tau_high: float = 0.5
    tau_low: float = 0.2
    max_search_frames: int = 30
    direction: str = BACKWARD
    z_range: tuple[float, float] = (0.0, 2.0)

    def __post_init__(self):
        if not 0.0 < self.tau_low < self.tau_high <= 1.0:
            raise ConfigurationError("search gates must satisfy 0 < tau_low < tau_high <= 1")
        if self.max_search_frames < 1:
            raise ConfigurationError("max_search_frames must be >= 1")
        if self.direction not in (BACKWARD, FORWARD):
            raise ConfigurationError(f"direction must be '{BACKWARD}' or '{FORWARD}'")
        if not self.z_range[0] < self.z_range[1]:
            raise ConfigurationError("search z_range must satisfy z_min < z_max")


class Clarity(enum.Enum):
    CLEAR = "clear"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True, eq=False)
class FrameRef:
    """A clear view of one track: camera, frame, projected and detected boxes."""

    track_id: int
    camera_index: int
    t: int
    projected_box: ProjectedBox
    matched_image_box: PixelBox
    corner_count: int = 0


@dataclass(frozen=True)
class CameraChoice:
    camera_index: int
    corner_count: int
    projected: ProjectedBox

    @property
    def score(self) -> float:
        area = self.projected.unclamped_area
        return 1.0 / area if area > 0 else float("inf")


@dataclass(eq=False)
class FusionContext:
    """Per-sequence data the camera search reads.

    Attributes:
        bev_boxes: ``{frame: {track_id: BevBox}}`` for every tracked frame.
        cameras: Calibrated cameras, indexed by position.
        detections: ``(camera_index, frame) -> DetectionSet`` in pixel units.
        grid: BEV grid the boxes live on.
        first_frame, last_frame: Sequence bounds for the search.
    """

    bev_boxes: Mapping[int, Mapping[int, BevBox]]
    cameras: Sequence[CameraModel]
    detections: Callable[[int, int], DetectionSet]
    grid: BevGrid = field(default_factory=BevGrid.default)
    first_frame: int = 1
    last_frame: int = 1

    @classmethod
    def from_table(
        cls,
        table: TrackTable,
        cameras: Sequence[CameraModel],
        detections: Callable[[int, int], DetectionSet],
        grid: BevGrid | None = None,
        frames: Sequence[int] | None = None,
    ) -> "FusionContext":
        grid = grid or BevGrid.default()
        frames = list(frames) if frames is not None else table.frames
        bev_boxes: dict[int, dict[int, BevBox]] = {}
        for frame in frames:
            boxes = {}
            for r in table[frame]:
                box = box_from_center(r.cx, r.cy, r.w, r.h, grid)
                if box is not None:
                    boxes[r.id] = box
            bev_boxes[frame] = boxes
        return cls(bev_boxes, cameras, detections, grid, min(frames, default=1), max(frames, default=1))


def _project_box(box: BevBox, cam: CameraModel, grid: BevGrid, z_range) -> ProjectedBox:
    return project(voxelize(box, grid, z_range), cam)


def corner_inclusion_count(
    track_id: int,
    t: int,
    camera: CameraModel,
    bev_boxes: Mapping[int, BevBox],
    grid: BevGrid,
    z_range: Sequence[float] = (0.0, 2.0),
    projected: ProjectedBox | None = None,
) -> int:
    """Number of the id's 8 projected corners inside any other id's projected box.

    Raises ``BehindCameraError`` when the id itself cannot be projected; other
    ids behind the camera are ignored.
    """
    if projected is None:
        projected = _project_box(bev_boxes[track_id], camera, grid, z_range)
    inside = np.zeros(_CORNERS, dtype=bool)
    for other_id, other_box in bev_boxes.items():
        if other_id == track_id:
            continue
        try:
            other = _project_box(other_box, camera, grid, z_range)
        except BehindCameraError:
            continue
        inside |= other.unclamped.contains(projected.corners)
        if inside.all():
            break
    return int(inside.sum())


def select_camera(
    track_id: int,
    t: int,
    bev_boxes: Mapping[int, BevBox],
    cameras: Sequence[CameraModel],
    grid: BevGrid,
    z_range: Sequence[float] = (0.0, 2.0),
) -> CameraChoice | None:
    """Camera with the fewest covered corners; ties go to the largest projected box.

    A camera is eligible when the id projects in front of it and lands at
    least partly inside the image.
    """
    best: CameraChoice | None = None
    for index, cam in enumerate(cameras):
        try:
            projected = _project_box(bev_boxes[track_id], cam, grid, z_range)
        except BehindCameraError:
            continue
        if not projected.visible:
            continue
        count = corner_inclusion_count(track_id, t, cam, bev_boxes, grid, z_range, projected)
        choice = CameraChoice(index, count, projected)
        if best is None or (choice.corner_count, choice.score) < (best.corner_count, best.score):
            best = choice
    return best


def gate_match(
    projected_box: PixelBox,
    image_detections: Sequence[PixelBox],
    cfg: SearchConfig,
) -> tuple[Clarity, PixelBox | None]:
    """Clarity verdict plus the single strongly overlapping detection when clear."""
    if projected_box is None or projected_box.area <= 0:
        return Clarity.AMBIGUOUS, None
    overlaps = [(iou(projected_box, d), d) for d in image_detections if d.w > 0 and d.h > 0]
    strong = [d for score, d in overlaps if score >= cfg.tau_high]
    if len(strong) != 1:
        return Clarity.AMBIGUOUS, None
    weak = [score for score, d in overlaps if d is not strong[0] and score >= cfg.tau_low]
    if weak:
        return Clarity.AMBIGUOUS, None
    return Clarity.CLEAR, strong[0]


def clarity_gate(
    projected_box: PixelBox,
    image_detections: Sequence[PixelBox],
    cfg: SearchConfig,
) -> Clarity:
    """``CLEAR`` iff exactly one detection reaches ``tau_high`` and all others stay below ``tau_low``."""
    return gate_match(projected_box, image_detections, cfg)[0]


def frame_search(
    track_id: int,
    t0: int,
    direction: str | None,
    ctx: FusionContext,
    cfg: SearchConfig,
) -> FrameRef | None:
    """First clear ``(camera, frame)`` for *track_id* walking from *t0*.

    Backward search visits ``t0, t0-1, ...``, forward ``t0, t0+1, ...``; at
    most ``max_search_frames`` frames are visited. Frames in which the id has
    no track are skipped. *direction* falls back to ``cfg.direction`` when
    ``None``.
    """
    direction = direction or cfg.direction
    if direction not in (BACKWARD, FORWARD):
        raise ConfigurationError(f"direction must be '{BACKWARD}' or '{FORWARD}'")
    step = -1 if direction == BACKWARD else 1
    for offset in range(cfg.max_search_frames):
        t = t0 + step * offset
        if t < ctx.first_frame or t > ctx.last_frame:
            break
        boxes = ctx.bev_boxes.get(t, {})
        if track_id not in boxes:
            continue
        choice = select_camera(track_id, t, boxes, ctx.cameras, ctx.grid, cfg.z_range)
        if choice is None:
            continue
        dets = ctx.detections(choice.camera_index, t)
        clarity, matched = gate_match(choice.projected.box, dets.boxes, cfg)
        if clarity is Clarity.CLEAR:
            logger.debug(
                "id %d: clear view in camera %d at frame %d (%s from %d)",
                track_id, choice.camera_index, t, direction, t0,
            )
            return FrameRef(track_id, choice.camera_index, t, choice.projected, matched, choice.corner_count)
    logger.debug("id %d: no clear view within %d frame(s) %s of %d", track_id, cfg.max_search_frames, direction, t0)
    return None


def format_patch_request(ref: FrameRef, k: int, direction: str) -> str:
    """Patch line ``id k direction camera t x y w h`` for an external embedding model."""
    b = ref.matched_image_box
    return f"{ref.track_id} {k} {direction} {ref.camera_index} {ref.t} {b.x:.1f} {b.y:.1f} {b.w:.1f} {b.h:.1f}"
