"""Gated minimum-cost assignment and the two-stage track/detection association."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..detection.base import DetectionSet
from ..detection.boxes import iou_matrix
from ..geometry.bev import BevGrid

if TYPE_CHECKING:
    from .tracker import TrackerConfig, TrackState

logger = logging.getLogger(__name__)

# Cost given to gated-out pairs; any value above every real cost works.
FORBIDDEN_COST = 1e6


def linear_assignment(
    cost_matrix: np.ndarray,
    thresh: float,
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Minimum-cost one-to-one assignment with pairs costing more than *thresh* forbidden.

    The matrix is extended with one dummy column per row and one dummy row per
    column, each costing ``thresh / 2``, so leaving a row and a column
    unmatched costs exactly *thresh* (the ``extend_cost``/``cost_limit``
    behaviour of lapjv). Returns ``(matches, unmatched_rows, unmatched_cols)``;
    matches are sorted by row.
    """
    cost_matrix = np.asarray(cost_matrix, dtype=np.float64)
    n_rows, n_cols = cost_matrix.shape
    if cost_matrix.size == 0:
        return [], list(range(n_rows)), list(range(n_cols))

    size = n_rows + n_cols
    extended = np.full((size, size), FORBIDDEN_COST)
    extended[:n_rows, :n_cols] = np.where(cost_matrix > thresh, FORBIDDEN_COST, cost_matrix)
    extended[np.arange(n_rows), n_cols + np.arange(n_rows)] = thresh / 2.0
    extended[n_rows + np.arange(n_cols), np.arange(n_cols)] = thresh / 2.0
    extended[n_rows:, n_cols:] = 0.0
    rows, cols = linear_sum_assignment(extended)
    matches = [
        (int(r), int(c)) for r, c in zip(rows, cols)
        if r < n_rows and c < n_cols and cost_matrix[r, c] <= thresh
    ]
    matched_rows = {r for r, _ in matches}
    matched_cols = {c for _, c in matches}
    return (
        sorted(matches),
        [r for r in range(n_rows) if r not in matched_rows],
        [c for c in range(n_cols) if c not in matched_cols],
    )


def iou_cost(track_boxes: np.ndarray, det_boxes: np.ndarray) -> np.ndarray:
    """``1 - IoU`` between ``(N, 4)`` and ``(M, 4)`` top-left ``x, y, w, h`` arrays."""
    return 1.0 - iou_matrix(track_boxes, det_boxes)


@dataclass
class AssociationResult:
    """Outcome of one frame's association.

    ``matches`` holds ``(track_index, detection_index)`` pairs into the lists
    given to ``associate``; ``stage`` maps a detection index to 1 or 2.
    """

    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_dets: list[int] = field(default_factory=list)
    stage: dict[int, int] = field(default_factory=dict)


def associate(
    predicted: Sequence["TrackState"],
    dets: DetectionSet,
    cfg: "TrackerConfig",
    grid: BevGrid | None = None,
) -> AssociationResult:
    """Two-stage association of predicted tracks with one frame's detections.

    Stage 1 pairs high-confidence detections with every live track; stage 2
    pairs low-confidence detections with the active tracks stage 1 left over.
    Detections below ``low_conf_threshold`` are never matched.
    """
    grid = grid or BevGrid.default()
    conf = dets.confidences
    det_boxes = dets.world_boxes(grid)
    track_boxes = np.array([t.tlwh for t in predicted]).reshape(-1, 4)

    high = [i for i in range(len(dets)) if conf[i] >= cfg.high_conf_threshold]
    low = [i for i in range(len(dets)) if cfg.low_conf_threshold <= conf[i] < cfg.high_conf_threshold]

    result = AssociationResult()

    # ── Stage 1: high-confidence detections vs all tracks ──
    cost = iou_cost(track_boxes, det_boxes[high])
    matches, u_track, u_high = linear_assignment(cost, cfg.match_threshold_stage1)
    for ti, di in matches:
        result.matches.append((ti, high[di]))
        result.stage[high[di]] = 1

    # ── Stage 2: low-confidence detections vs remaining active tracks ──
    remaining = [ti for ti in u_track if predicted[ti].is_active]
    cost = iou_cost(track_boxes[remaining], det_boxes[low])
    matches, u_remaining, u_low = linear_assignment(cost, cfg.match_threshold_stage2)
    for ri, di in matches:
        result.matches.append((remaining[ri], low[di]))
        result.stage[low[di]] = 2

    matched_tracks = {ti for ti, _ in result.matches}
    matched_dets = {di for _, di in result.matches}
    result.matches.sort()
    result.unmatched_tracks = [i for i in range(len(predicted)) if i not in matched_tracks]
    result.unmatched_dets = [i for i in range(len(dets)) if i not in matched_dets]
    logger.debug(
        "associate: %d stage-1 + %d stage-2 matches, %d unmatched tracks",
        len(result.matches) - len(matches), len(matches), len(result.unmatched_tracks),
    )
    return result
