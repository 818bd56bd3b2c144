from __future__ import annotations

import numpy as np
import pytest

from conftest import track_table
from court_fusion.errors import ConfigurationError, DegenerateInputError, ProviderError
from court_fusion.fusion.matching import FrameRef, FusionContext, SearchConfig
from court_fusion.fusion.occlusion import OcclusionSession
from court_fusion.fusion.providers import FileEmbeddingProvider, SyntheticEmbeddingProvider
from court_fusion.fusion.reid import (
    SCOPE_LOST_GAIN,
    EmbeddingVector,
    IdRemap,
    apply_remap,
    cosine,
    resolve_session,
)
from court_fusion.fusion.runner import STATUS_REPAIRED, STATUS_UNREPAIRED, ReidConfig, run_sessions
from court_fusion.geometry.camera import PixelBox, ProjectedBox
from court_fusion.ingestion.records import CameraGtBox
from court_fusion.metrics.matching import MatchingConfig
from court_fusion.metrics.report import evaluate_sequence
from court_fusion.pipeline.runner import CameraDetections, fuse_tracks
from court_fusion.simulator.camera_gt import render_camera_gt
from court_fusion.simulator.embeddings import EmbeddingModel, anchor_vector
from court_fusion.simulator.scenario import Scenario, ScenarioConfig
from court_fusion.tracking.tracker import TrackRecord, TrackTable


def _e(index: int, dim: int = 4) -> EmbeddingVector:
    v = np.zeros(dim)
    v[index] = 1.0
    return EmbeddingVector(v)


# ── Vectors ──────────────────────────────────────────────────────────────────

def test_embedding_is_normalized():
    v = EmbeddingVector([3.0, 4.0])
    np.testing.assert_allclose(v.values, [0.6, 0.8])
    assert v.dim == 2


def test_zero_embedding_is_rejected():
    with pytest.raises(DegenerateInputError):
        EmbeddingVector([0.0, 0.0])


def test_cosine():
    assert cosine([1.0, 0.0], [0.0, 2.0]) == 0.0
    assert cosine(_e(1), _e(1)) == pytest.approx(1.0)
    assert cosine([1.0, 1.0], [-1.0, -1.0]) == pytest.approx(-1.0)
    with pytest.raises(DegenerateInputError):
        cosine([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(DegenerateInputError):
        cosine([1.0, 0.0], [1.0, 0.0, 0.0])


# ── Session resolution ───────────────────────────────────────────────────────

SWAP = OcclusionSession(
    k=1, t_s=4, t_e=6, n_ref=3,
    lost_ids=frozenset({2}), gain_ids=frozenset({4}),
    neighbor_lost_ids=frozenset({1}), neighbor_gain_ids=frozenset({1}),
)


def test_resolve_session_repairs_identity_swap():
    # After the occlusion track 1 follows player B and new track 4 follows player A.
    pre = {1: _e(0), 2: _e(1)}
    post = {1: _e(1), 4: _e(0)}
    remap = resolve_session(SWAP, pre, post)
    assert remap.mapping == {4: 1, 1: 2}
    assert [(a, b) for a, b, _ in remap.pairs] == [(1, 4), (2, 1)]


def test_resolve_session_keeps_consistent_ids():
    pre = {1: _e(0), 2: _e(1)}
    post = {1: _e(0), 4: _e(1)}
    remap = resolve_session(SWAP, pre, post)
    assert remap.mapping == {4: 2}
    assert (1, 1) in [(a, b) for a, b, _ in remap.pairs]


def test_lost_gain_scope_only_renames_gained_ids():
    pre = {1: _e(0), 2: _e(1)}
    post = {1: _e(1), 4: _e(0)}
    assert resolve_session(SWAP, pre, post, SCOPE_LOST_GAIN).mapping == {}
    post = {1: _e(0), 4: _e(1)}
    assert resolve_session(SWAP, pre, post, SCOPE_LOST_GAIN).mapping == {4: 2}


def test_min_cosine_stops_weak_pairs():
    pre = {2: _e(1)}
    post = {4: _e(2)}
    assert not resolve_session(SWAP, pre, post, min_cosine=0.5)
    assert resolve_session(SWAP, pre, post).mapping == {4: 2}


def test_missing_side_leaves_session_unrepaired():
    remap = resolve_session(SWAP, {1: _e(0)}, {})
    assert not remap
    assert remap.pairs == []


def test_unknown_scope_is_rejected():
    with pytest.raises(ConfigurationError):
        resolve_session(SWAP, {}, {}, scope="everything")
    with pytest.raises(ConfigurationError):
        ReidConfig(workers=0)


# ── Applying remaps ──────────────────────────────────────────────────────────

def _table():
    return track_table({
        1: [(f, 5.0, 5.0) for f in range(1, 8)],
        2: [(f, 5.5, 5.0) for f in range(1, 4)],
        4: [(f, 5.2, 5.0) for f in range(6, 8)],
    })


def test_apply_remap_renames_from_t_e_on():
    out = apply_remap(_table(), [IdRemap(1, 6, {4: 2})])
    assert out.ids == [1, 2]
    assert out.ids_at(6) == {1, 2}
    assert out.ids_at(5) == {1}
    assert len(out) == len(_table())


def test_apply_remap_swaps_ids_together():
    out = apply_remap(_table(), [IdRemap(1, 6, {4: 1, 1: 2})])
    assert out.record(7, 2).cx == 5.0
    assert out.record(7, 1).cx == 5.2
    assert out.record(2, 1).cx == 5.0


def test_apply_remap_rejects_duplicate_ids():
    rejected: list[dict] = []
    out = apply_remap(_table(), [IdRemap(3, 6, {4: 1})], rejected)
    assert [r["k"] for r in rejected] == [3]
    assert out.ids == _table().ids


def test_later_remap_follows_earlier_rename():
    table = track_table({
        1: [(f, 5.0, 5.0) for f in range(1, 3)],
        5: [(f, 5.0, 5.0) for f in range(3, 5)],
        6: [(f, 5.0, 5.0) for f in range(5, 7)],
    })
    out = apply_remap(table, [IdRemap(2, 5, {6: 5}), IdRemap(1, 3, {5: 1})])
    assert out.ids == [1]


# ── Providers ────────────────────────────────────────────────────────────────

def _ref(track_id: int, t: int, box: PixelBox) -> FrameRef:
    return FrameRef(track_id, 0, t, ProjectedBox(box, box, np.zeros((8, 2))), box)


CAMERA_GT = {0: {3: [CameraGtBox(3, 7, PixelBox(100, 100, 50, 100), 1.0)]}}


def test_synthetic_provider_embeds_the_identity_under_the_patch():
    model = EmbeddingModel(dim=32)
    provider = SyntheticEmbeddingProvider(CAMERA_GT, model, seed=11)
    vec = provider.embed(_ref(2, 3, PixelBox(101, 100, 50, 100)))
    assert vec.dim == 32
    assert cosine(vec, anchor_vector(7, 11, model)) > 0.9
    with pytest.raises(ProviderError):
        provider.embed(_ref(2, 4, PixelBox(101, 100, 50, 100)))


def test_file_provider_lookups():
    stored = {(2, 3, 0): _e(0), (7, 3, 0): _e(1)}
    by_track = FileEmbeddingProvider(stored)
    assert cosine(by_track.embed(_ref(2, 3, PixelBox(0, 0, 1, 1))), _e(0)) == pytest.approx(1.0)
    with pytest.raises(ProviderError):
        by_track.embed(_ref(3, 3, PixelBox(0, 0, 1, 1)))

    by_gt = FileEmbeddingProvider(stored, key="gt", camera_gt=CAMERA_GT)
    assert cosine(by_gt.embed(_ref(2, 3, PixelBox(100, 100, 50, 100))), _e(1)) == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        FileEmbeddingProvider(stored, key="gt")


def test_run_sessions_without_provider_leaves_table_unchanged(grid):
    table = _table()
    sessions = [SWAP, OcclusionSession(2, 7, 7, 2, frozenset({1}), frozenset(), open=True)]
    ctx = FusionContext.from_table(table, [], lambda cam, t: None, grid)
    out = run_sessions(table, sessions, ctx, None)
    assert out["skipped"] == [2]
    assert out["results"][1]["status"] == STATUS_UNREPAIRED
    assert list(out["tracks"]) == list(table)


# ── Scripted crossing ────────────────────────────────────────────────────────

def _crossing_scenario() -> Scenario:
    # Two players pass each other along the court's long axis, 0.6 m apart laterally.
    t = np.arange(120, dtype=float)
    positions = np.stack([
        np.column_stack([8.0 + 0.1 * t, np.full_like(t, 7.2)]),
        np.column_stack([20.0 - 0.1 * t, np.full_like(t, 7.8)]),
    ], axis=1)
    return Scenario(ScenarioConfig(player_count=2, duration_s=12.0), 0, (1, 2), positions, np.zeros((120, 2)))


def _swapped_lidar_tracks(scenario: Scenario, t_s: int, t_e: int) -> TrackTable:
    """Id 2 vanishes while the players overlap; afterwards id 1 follows player 2 and id 3 player 1."""
    records = []
    for f in scenario.frames:
        (x1, y1), (x2, y2) = scenario.positions_at(f)
        if f < t_e:
            records.append(TrackRecord(f, 1, x1, y1, 0.6, 0.6))
        if f < t_s:
            records.append(TrackRecord(f, 2, x2, y2, 0.6, 0.6))
        if f >= t_e:
            records.append(TrackRecord(f, 1, x2, y2, 0.6, 0.6))
            records.append(TrackRecord(f, 3, x1, y1, 0.6, 0.6))
    return TrackTable(records, scenario.frames)


def test_crossing_identities_are_restored_from_camera_views(grid):
    scenario = _crossing_scenario()
    gap = np.linalg.norm(scenario.positions[:, 0] - scenario.positions[:, 1], axis=1)
    hidden = [f for f in scenario.frames if gap[f - 1] < 0.8]
    t_s, t_e = hidden[0], hidden[-1] + 1
    lidar = _swapped_lidar_tracks(scenario, t_s, t_e)

    cameras = [rig.camera_model() for rig in scenario.cfg.rigs]
    camera_gt = {
        i: {f: render_camera_gt(scenario, cam, f) for f in scenario.frames}
        for i, cam in enumerate(cameras)
    }
    provider = SyntheticEmbeddingProvider(camera_gt, EmbeddingModel(dim=16, anchors="orthogonal"), seed=3)
    fused = fuse_tracks(
        lidar, list(scenario.frames), cameras, CameraDetections({}, camera_gt, cameras),
        provider, SearchConfig(), ReidConfig(), grid,
    )
    assert [(s.t_s, s.t_e) for s in fused["sessions"]] == [(t_s, t_e)]
    assert fused["results"][1]["status"] == STATUS_REPAIRED

    tracks = fused["tracks"]
    assert tracks.ids == [1, 2]
    for f in range(t_e, scenario.frame_count + 1):
        assert tracks.positions_at(f)[1] == pytest.approx(tuple(scenario.positions_at(f)[0]))
        assert tracks.positions_at(f)[2] == pytest.approx(tuple(scenario.positions_at(f)[1]))

    gt = scenario.ground_truth()
    cfg = MatchingConfig(0.5)
    before = evaluate_sequence(gt, lidar, cfg, "lidar")
    after = evaluate_sequence(gt, tracks, cfg, "fusion")
    assert (before.idsw, after.idsw) == (2, 0)
    assert after.r_id >= before.r_id
    assert (before.n_dis, before.n_re, after.n_re) == (2, 0, 1)
    assert after.idf1 > before.idf1
    assert (after.deta, after.fp, after.fn) == (before.deta, before.fp, before.fn)
