"""
MOTA, IDF1, HOTA and the occlusion ID-recovery rate over matched sequences.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import EmptyInputError
from ..ingestion.records import GroundTruthSequence
from ..tracking.tracker import TrackTable
from .matching import MatchingConfig, SequenceMatches, match_sequence

HOTA_SWEEP_ALPHAS = tuple(np.round(np.arange(0.05, 0.96, 0.05), 2))


def _require_gt(seq: SequenceMatches) -> None:
    if seq.gt_count == 0:
        raise EmptyInputError("metrics need at least one ground-truth box")


def id_switches(seq: SequenceMatches) -> int:
    """Matched GT whose pred id differs from its most recent matched pred id."""
    last: dict[int, int] = {}
    switches = 0
    for frame in seq.frames:
        for gt_id, pred_id, _ in frame.pairs:
            if gt_id in last and last[gt_id] != pred_id:
                switches += 1
            last[gt_id] = pred_id
    return switches


def mota(seq: SequenceMatches) -> float:
    _require_gt(seq)
    return 1.0 - (seq.fp + seq.fn + id_switches(seq)) / seq.gt_count


def _pair_counts(seq: SequenceMatches) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = defaultdict(int)
    for frame in seq.frames:
        for gt_id, pred_id, _ in frame.pairs:
            counts[(gt_id, pred_id)] += 1
    return counts


@dataclass(frozen=True)
class IdentityCounts:
    idtp: int
    idfp: int
    idfn: int

    @property
    def idf1(self) -> float:
        denom = 2 * self.idtp + self.idfp + self.idfn
        return 2 * self.idtp / denom if denom else 0.0


def identity_counts(seq: SequenceMatches) -> IdentityCounts:
    """IDTP/IDFP/IDFN under the GT-id to pred-id bijection that maximizes IDTP."""
    counts = _pair_counts(seq)
    idtp = 0
    if counts:
        gt_ids = sorted({g for g, _ in counts})
        pred_ids = sorted({p for _, p in counts})
        gi = {g: i for i, g in enumerate(gt_ids)}
        pj = {p: j for j, p in enumerate(pred_ids)}
        mat = np.zeros((len(gt_ids), len(pred_ids)), dtype=np.int64)
        for (g, p), c in counts.items():
            mat[gi[g], pj[p]] = c
        rows, cols = linear_sum_assignment(-mat)
        idtp = int(mat[rows, cols].sum())
    return IdentityCounts(idtp, seq.pred_count - idtp, seq.gt_count - idtp)


def idf1(seq: SequenceMatches) -> float:
    _require_gt(seq)
    return identity_counts(seq).idf1


def hota(seq: SequenceMatches) -> tuple[float, float, float]:
    """``(HOTA, DetA, AssA)`` at the sequence's single distance threshold.

    DetA = TP / (TP + FP + FN); AssA averages TPA / (TPA + FPA + FNA) over
    every matched pair occurrence. FNA counts every frame the GT id is present
    without that pairing, matched or not; FPA does the same for the pred id.
    """
    _require_gt(seq)
    tp = seq.tp
    if tp == 0:
        return 0.0, 0.0, 0.0
    det_a = tp / (tp + seq.fp + seq.fn)

    counts = _pair_counts(seq)
    per_gt: dict[int, int] = defaultdict(int)
    per_pred: dict[int, int] = defaultdict(int)
    for frame in seq.frames:
        for g in frame.gt_ids:
            per_gt[g] += 1
        for p in frame.pred_ids:
            per_pred[p] += 1
    total = 0.0
    for (g, p), tpa in counts.items():
        fpa = per_pred[p] - tpa
        fna = per_gt[g] - tpa
        total += tpa * tpa / (tpa + fpa + fna)
    ass_a = total / tp
    return math.sqrt(det_a * ass_a), det_a, ass_a


@dataclass(frozen=True)
class HotaSweep:
    alphas: tuple[float, ...]
    hota: tuple[float, ...]
    det_a: tuple[float, ...]
    ass_a: tuple[float, ...]

    @property
    def mean(self) -> tuple[float, float, float]:
        return float(np.mean(self.hota)), float(np.mean(self.det_a)), float(np.mean(self.ass_a))


def hota_sweep(gt: GroundTruthSequence, pred: TrackTable, cfg: MatchingConfig) -> HotaSweep:
    """HOTA at thresholds ``base * (1 - alpha)`` for alpha = 0.05 .. 0.95."""
    base = cfg.resolve(gt).distance_threshold
    rows = [hota(match_sequence(gt, pred, MatchingConfig(base * (1.0 - a)))) for a in HOTA_SWEEP_ALPHAS]
    return HotaSweep(
        HOTA_SWEEP_ALPHAS,
        tuple(r[0] for r in rows),
        tuple(r[1] for r in rows),
        tuple(r[2] for r in rows),
    )


@dataclass(frozen=True)
class RecoveryStats:
    n_re: int
    n_dis: int

    @property
    def no_events(self) -> bool:
        return self.n_dis == 0

    @property
    def rate(self) -> float:
        return 1.0 if self.n_dis == 0 else self.n_re / self.n_dis


def id_recovery_rate(seq: SequenceMatches) -> RecoveryStats:
    """Count broken (gt, pred) pairings and how many of them come back.

    Walking each GT id over the frames it is present in, an event fires when
    the pairing held in the previous present frame is not held in the current
    one (the pred id vanished or changed). The event is recovered when the
    same pairing is matched again at any later frame.
    """
    active: dict[int, int | None] = {}
    pending: dict[int, set[int]] = defaultdict(set)
    n_dis = n_re = 0
    for frame in seq.frames:
        matched = {g: p for g, p, _ in frame.pairs}
        for gt_id in frame.gt_ids:
            current = matched.get(gt_id)
            previous = active.get(gt_id)
            if previous is not None and current != previous:
                n_dis += 1
                pending[gt_id].add(previous)
            if current is not None and current in pending[gt_id]:
                n_re += 1
                pending[gt_id].discard(current)
            active[gt_id] = current
    return RecoveryStats(n_re, n_dis)
