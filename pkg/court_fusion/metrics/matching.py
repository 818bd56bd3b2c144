"""
Point-based correspondence between ground truth and predictions.

Objects are compared by the distance between their BEV centres; a pair is
admissible when that distance does not exceed the matching threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from ..errors import AlignmentError, ConfigurationError, EmptyInputError
from ..ingestion.records import GroundTruthSequence
from ..tracking.tracker import TrackTable

# Cost of an inadmissible pair; larger than any sum of admissible distances.
_FORBIDDEN = 1e9


class _Located(Protocol):
    cx: float
    cy: float


@dataclass(frozen=True)
class MatchingConfig:
    """``distance_threshold`` in meters; ``None`` means the mean GT box diagonal."""

    distance_threshold: float | None = None

    def __post_init__(self):
        if self.distance_threshold is not None and not self.distance_threshold > 0:
            raise ConfigurationError(f"distance_threshold must be > 0, got {self.distance_threshold}")

    def resolve(self, gt: GroundTruthSequence) -> "MatchingConfig":
        if self.distance_threshold is not None:
            return self
        return MatchingConfig(mean_gt_diagonal(gt))


def mean_gt_diagonal(gt: GroundTruthSequence | Sequence) -> float:
    boxes = list(gt)
    if not boxes:
        raise EmptyInputError("mean_gt_diagonal needs at least one ground-truth box")
    return float(np.mean([math.hypot(b.w, b.h) for b in boxes]))


@dataclass
class FrameMatch:
    """Assignment for one frame, as indices into the GT and prediction lists."""

    matches: list[tuple[int, int, float]] = field(default_factory=list)
    unmatched_gt: list[int] = field(default_factory=list)
    unmatched_pred: list[int] = field(default_factory=list)


def _threshold(cfg: MatchingConfig | float) -> float:
    value = cfg.distance_threshold if isinstance(cfg, MatchingConfig) else cfg
    if value is None:
        raise ConfigurationError("match_frame needs a resolved distance threshold")
    return float(value)


def match_frame(
    gt_frame: Sequence[_Located],
    pred_frame: Sequence[_Located],
    cfg: MatchingConfig | float,
) -> FrameMatch:
    """Minimum-total-distance one-to-one matching of centres within the threshold."""
    threshold = _threshold(cfg)
    n, m = len(gt_frame), len(pred_frame)
    if n == 0 or m == 0:
        return FrameMatch([], list(range(n)), list(range(m)))

    dist = cdist(
        np.array([(g.cx, g.cy) for g in gt_frame]),
        np.array([(p.cx, p.cy) for p in pred_frame]),
    )
    cost = np.where(dist <= threshold, dist, _FORBIDDEN)
    rows, cols = linear_sum_assignment(cost)
    result = FrameMatch()
    matched_g, matched_p = set(), set()
    for g, p in zip(rows.tolist(), cols.tolist()):
        if dist[g, p] <= threshold:
            result.matches.append((g, p, float(dist[g, p])))
            matched_g.add(g)
            matched_p.add(p)
    result.unmatched_gt = [g for g in range(n) if g not in matched_g]
    result.unmatched_pred = [p for p in range(m) if p not in matched_p]
    return result


@dataclass
class FrameResult:
    frame: int
    gt_ids: list[int]
    pred_ids: list[int]
    pairs: list[tuple[int, int, float]]

    @property
    def fn(self) -> int:
        return len(self.gt_ids) - len(self.pairs)

    @property
    def fp(self) -> int:
        return len(self.pred_ids) - len(self.pairs)


@dataclass
class SequenceMatches:
    """Per-frame ``(gt_id, pred_id, distance)`` pairs for a whole sequence."""

    frames: list[FrameResult]
    distance_threshold: float

    @property
    def gt_count(self) -> int:
        return sum(len(f.gt_ids) for f in self.frames)

    @property
    def pred_count(self) -> int:
        return sum(len(f.pred_ids) for f in self.frames)

    @property
    def tp(self) -> int:
        return sum(len(f.pairs) for f in self.frames)

    @property
    def fp(self) -> int:
        return sum(f.fp for f in self.frames)

    @property
    def fn(self) -> int:
        return sum(f.fn for f in self.frames)


def check_alignment(gt: GroundTruthSequence, pred: TrackTable) -> None:
    """Predictions must not reach outside the ground-truth frame range."""
    gt_frames = gt.frames
    if not gt_frames:
        raise EmptyInputError("ground truth has no frames")
    outside = [f for f in pred.frames if f < gt_frames[0] or f > gt_frames[-1]]
    if outside:
        raise AlignmentError(
            f"predictions cover frames {outside[0]}..{outside[-1]} outside the ground-truth range "
            f"{gt_frames[0]}..{gt_frames[-1]}"
        )


def match_sequence(gt: GroundTruthSequence, pred: TrackTable, cfg: MatchingConfig) -> SequenceMatches:
    check_alignment(gt, pred)
    cfg = cfg.resolve(gt)
    frames = sorted(set(gt.frames) | set(pred.frames))
    results = []
    for frame in frames:
        g_rows, p_rows = gt[frame], pred[frame]
        fm = match_frame(g_rows, p_rows, cfg)
        results.append(FrameResult(
            frame,
            [g.gt_id for g in g_rows],
            [p.id for p in p_rows],
            [(g_rows[gi].gt_id, p_rows[pi].id, d) for gi, pi, d in fm.matches],
        ))
    return SequenceMatches(results, float(cfg.distance_threshold))
