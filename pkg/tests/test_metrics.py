from __future__ import annotations

import dataclasses
import itertools
import math
from collections import Counter

import numpy as np
import pytest

from conftest import gt_sequence, track_table
from court_fusion.errors import AlignmentError, EmptyInputError, ParseError
from court_fusion.ingestion.records import GroundTruthBox, GroundTruthSequence
from court_fusion.metrics.matching import MatchingConfig, match_frame, match_sequence, mean_gt_diagonal
from court_fusion.metrics.report import MetricsReport, comparison_table, evaluate_sequence
from court_fusion.metrics.scores import hota, id_recovery_rate, idf1, mota
from court_fusion.tracking.tracker import TrackRecord, TrackTable

CFG = MatchingConfig(1.0)


def _perfect(gt: GroundTruthSequence) -> TrackTable:
    return TrackTable(
        [TrackRecord(b.frame, b.gt_id, b.cx, b.cy, b.w, b.h) for b in gt],
        gt.frames,
    )


def _walk(n_frames: int, y: float) -> list[tuple[float, float]]:
    return [(1.0 + 0.1 * f, y) for f in range(n_frames)]


# ── Matching ─────────────────────────────────────────────────────────────────

def test_mean_gt_diagonal():
    assert mean_gt_diagonal([GroundTruthBox(1, 1, 0, 0, 3, 4)]) == 5.0
    assert mean_gt_diagonal([GroundTruthBox(1, 1, 0, 0, 3, 4), GroundTruthBox(1, 2, 0, 0, 6, 8)]) == 7.5
    with pytest.raises(EmptyInputError):
        mean_gt_diagonal([])


def test_match_frame_prefers_crossed_pairs():
    # d11 = 1.0, d12 = 0.4, d21 = 0.3, d22 = 0.9 along one line.
    gt = [GroundTruthBox(1, 1, 0.0, 0.0, 1, 1), GroundTruthBox(1, 2, 1.3, 0.0, 1, 1)]
    pred = [TrackRecord(1, 1, 1.0, 0.0, 1, 1), TrackRecord(1, 2, 0.4, 0.0, 1, 1)]
    result = match_frame(gt, pred, 0.5)
    assert [(g, p) for g, p, _ in result.matches] == [(0, 1), (1, 0)]
    assert result.unmatched_gt == [] and result.unmatched_pred == []


def test_match_frame_empty_predictions_are_all_misses():
    gt = [GroundTruthBox(1, 1, 0.0, 0.0, 1, 1)]
    result = match_frame(gt, [], 0.5)
    assert result.matches == [] and result.unmatched_gt == [0]


def _brute_force(dist: np.ndarray, threshold: float) -> tuple[int, float]:
    """Most admissible pairs, then least total distance, over all permutations."""
    n = dist.shape[0]
    best = (0, 0.0)
    for perm in itertools.permutations(range(n)):
        ds = [dist[i, perm[i]] for i in range(n) if dist[i, perm[i]] <= threshold]
        score = (len(ds), sum(ds))
        if score[0] > best[0] or (score[0] == best[0] and score[1] < best[1]):
            best = score
    return best


def test_match_frame_equals_exhaustive_optimum(rng):
    for _ in range(60):
        n = int(rng.integers(1, 7))
        g_xy = rng.uniform(0, 3, size=(n, 2))
        p_xy = rng.uniform(0, 3, size=(n, 2))
        gt = [GroundTruthBox(1, i, x, y, 0.6, 0.6) for i, (x, y) in enumerate(g_xy)]
        pred = [TrackRecord(1, i, x, y, 0.6, 0.6) for i, (x, y) in enumerate(p_xy)]
        result = match_frame(gt, pred, 1.0)
        dist = np.linalg.norm(g_xy[:, None, :] - p_xy[None, :, :], axis=2)
        count, total = _brute_force(dist, 1.0)
        assert len(result.matches) == count
        assert sum(d for _, _, d in result.matches) == pytest.approx(total)


def test_predictions_outside_ground_truth_range_are_rejected():
    gt = gt_sequence({1: _walk(3, 2.0)})
    pred = track_table({1: [(5, 1.0, 2.0)]})
    with pytest.raises(AlignmentError):
        match_sequence(gt, pred, CFG)


# ── Scores ───────────────────────────────────────────────────────────────────

def test_perfect_tracking_scores_one():
    gt = gt_sequence({1: _walk(20, 2.0), 2: _walk(20, 5.0)})
    report = evaluate_sequence(gt, _perfect(gt), CFG)
    assert (report.mota, report.idf1, report.hota, report.deta, report.assa) == (1.0, 1.0, 1.0, 1.0, 1.0)
    assert report.rid_no_events
    assert report.r_id == 1.0


def test_mota_with_one_miss_and_one_false_positive():
    gt = gt_sequence({1: _walk(5, 2.0), 2: _walk(5, 5.0)})
    records = [r for r in _perfect(gt) if not (r.frame == 3 and r.id == 2)]
    records.append(TrackRecord(4, 9, 20.0, 10.0, 0.6, 0.6))
    seq = match_sequence(gt, TrackTable(records), CFG)
    assert (seq.gt_count, seq.fp, seq.fn) == (10, 1, 1)
    assert mota(seq) == pytest.approx(0.8)


def test_idf1_half_coverage():
    gt = gt_sequence({1: _walk(100, 2.0)})
    pred = track_table({1: [(f, 1.0 + 0.1 * (f - 1), 2.0) for f in range(1, 51)],
                        2: [(f, 1.0 + 0.1 * (f - 1), 2.0) for f in range(51, 101)]})
    assert idf1(match_sequence(gt, pred, CFG)) == pytest.approx(0.5)


def test_no_predictions():
    gt = gt_sequence({1: _walk(10, 2.0)})
    seq = match_sequence(gt, TrackTable(frames=gt.frames), CFG)
    assert idf1(seq) == 0.0
    assert hota(seq) == (0.0, 0.0, 0.0)
    assert mota(seq) == 0.0


def _assa_by_enumeration(seq) -> float:
    occurrences = [(g, p) for f in seq.frames for g, p, _ in f.pairs]
    pair_counts = Counter(occurrences)
    gt_counts = Counter(g for f in seq.frames for g in f.gt_ids)
    pred_counts = Counter(p for f in seq.frames for p in f.pred_ids)
    scores = []
    for g, p in occurrences:
        tpa = pair_counts[(g, p)]
        scores.append(tpa / (tpa + (pred_counts[p] - tpa) + (gt_counts[g] - tpa)))
    return sum(scores) / len(scores)


def test_hota_with_one_mid_sequence_switch():
    gt = gt_sequence({1: _walk(100, 2.0), 2: _walk(100, 5.0)})
    records = [
        dataclasses.replace(r, id=3) if r.id == 2 and r.frame > 50 else r
        for r in _perfect(gt)
    ]
    seq = match_sequence(gt, TrackTable(records), CFG)
    h, det_a, ass_a = hota(seq)
    assert det_a == 1.0
    assert ass_a == pytest.approx(_assa_by_enumeration(seq))
    assert ass_a == pytest.approx(0.75)
    assert h == pytest.approx(math.sqrt(ass_a))


def test_hota_counts_unmatched_frames_of_each_id():
    gt = gt_sequence({1: _walk(4, 2.0)})
    pred = track_table({1: [(1, 1.0, 2.0), (2, 1.1, 2.0), (3, 20.0, 10.0), (4, 20.0, 10.0)]})
    h, det_a, ass_a = hota(match_sequence(gt, pred, CFG))
    assert det_a == pytest.approx(1 / 3)
    assert ass_a == pytest.approx(1 / 3)
    assert h == pytest.approx(1 / 3)


def test_recovery_rate_same_and_new_pred_id():
    gt = gt_sequence({1: _walk(6, 2.0)})
    back = track_table({1: [(f, 1.0 + 0.1 * (f - 1), 2.0) for f in (1, 2, 5, 6)]})
    stats = id_recovery_rate(match_sequence(gt, back, CFG))
    assert (stats.n_dis, stats.n_re, stats.rate) == (1, 1, 1.0)

    new = track_table({1: [(f, 1.0 + 0.1 * (f - 1), 2.0) for f in (1, 2)],
                       2: [(f, 1.0 + 0.1 * (f - 1), 2.0) for f in (5, 6)]})
    stats = id_recovery_rate(match_sequence(gt, new, CFG))
    assert (stats.n_dis, stats.n_re, stats.rate) == (1, 0, 0.0)


def test_recovery_rate_counts_events_across_players():
    # Eight players each drop out for one frame; two come back under their old id.
    paths = {g: _walk(4, 2.0 * g) for g in range(1, 9)}
    gt = gt_sequence(paths)
    records = []
    for g in range(1, 9):
        for f in (1, 2, 4):
            pred_id = 10 + g if f < 4 or g <= 2 else 20 + g
            x, y = paths[g][f - 1]
            records.append(TrackRecord(f, pred_id, x, y, 0.6, 0.6))
    report = evaluate_sequence(gt, TrackTable(records, gt.frames), CFG)
    assert (report.n_dis, report.n_re) == (8, 2)
    assert report.r_id == pytest.approx(0.25)
    assert not report.rid_no_events


def test_metrics_invariant_under_prediction_relabeling():
    gt = gt_sequence({1: _walk(30, 2.0), 2: _walk(30, 2.5)})
    base = [r for r in _perfect(gt) if not (10 <= r.frame <= 12 and r.id == 2)]
    relabeled = [dataclasses.replace(r, id={1: 42, 2: 7}[r.id]) for r in base]
    a = evaluate_sequence(gt, TrackTable(base, gt.frames), CFG)
    b = evaluate_sequence(gt, TrackTable(relabeled, gt.frames), CFG)
    assert dataclasses.asdict(a) == dataclasses.asdict(b)


def test_default_threshold_is_mean_gt_diagonal():
    gt = gt_sequence({1: _walk(5, 2.0)}, size=0.6)
    report = evaluate_sequence(gt, _perfect(gt))
    assert report.distance_threshold == pytest.approx(math.hypot(0.6, 0.6))


def test_empty_ground_truth_is_rejected():
    with pytest.raises(EmptyInputError):
        evaluate_sequence(GroundTruthSequence(), TrackTable(), CFG)


# ── Reports ──────────────────────────────────────────────────────────────────

def test_report_file_roundtrip_and_sweep(tmp_path):
    gt = gt_sequence({1: _walk(10, 2.0)})
    report = evaluate_sequence(gt, _perfect(gt), CFG, method="lidar", sweep=True)
    assert report.hota_sweep == pytest.approx(1.0)
    path = tmp_path / "metrics_lidar.txt"
    report.write(path)
    assert MetricsReport.read(path) == report


def test_report_rejects_unknown_keys():
    with pytest.raises(ParseError):
        MetricsReport.from_lines(["mota=1.0", "speed=3"])


def test_comparison_table_marks_missing_recovery_events():
    table = comparison_table([MetricsReport(method="lidar"), MetricsReport(method="fusion", rid_no_events=False, r_id=0.5)])
    lines = table.splitlines()
    assert lines[0].split() == ["Method", "MOTA", "IDF1", "HOTA", "DetA", "AssA", "R_ID", "IDSW"]
    assert "n/a" in lines[2]
    assert "0.500" in lines[3]
