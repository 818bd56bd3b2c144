from __future__ import annotations

import numpy as np
import pytest

from court_fusion.errors import ConfigurationError, DataError
from court_fusion.geometry.camera import CameraModel, PixelBox
from court_fusion.simulator.camera_gt import render_camera_gt, union_area, visible_fraction
from court_fusion.simulator.embeddings import EmbeddingModel, synth_embedding
from court_fusion.simulator.export import cloud_path, write_scenario
from court_fusion.simulator.lidar import FLOOR, NO_HIT, cast_rays, lidar_returns, scan_directions
from court_fusion.simulator.rigs import LidarSpec, default_rigs
from court_fusion.simulator.scenario import (
    BodyModel,
    CrossingEvent,
    MotionModel,
    Scenario,
    ScenarioConfig,
    generate_scenario,
    random_crossings,
)

COARSE = LidarSpec(h_resolution_deg=2.0, v_resolution_deg=2.0)
SMALL = ScenarioConfig(player_count=4, duration_s=3.0, rigs=default_rigs(COARSE))


# ── Trajectories ─────────────────────────────────────────────────────────────

def test_same_seed_same_trajectories():
    a = generate_scenario(SMALL, seed=3)
    b = generate_scenario(SMALL, seed=3)
    c = generate_scenario(SMALL, seed=4)
    np.testing.assert_array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)
    assert a.positions.shape == (30, 4, 2)


def test_players_stay_on_court_and_under_max_speed():
    cfg = ScenarioConfig(player_count=10, duration_s=10.0)
    scenario = generate_scenario(cfg, seed=1)
    r = cfg.body.radius
    assert scenario.positions[..., 0].min() >= r - 1e-9
    assert scenario.positions[..., 0].max() <= cfg.court_length - r + 1e-9
    assert scenario.positions[..., 1].max() <= cfg.court_width - r + 1e-9
    step = np.linalg.norm(np.diff(scenario.positions, axis=0), axis=2)
    assert step.max() <= cfg.motion.max_speed / cfg.frame_rate + 1e-9


def test_velocity_changes_stay_within_acceleration_and_turn_limits():
    cfg = ScenarioConfig(player_count=10, duration_s=20.0)
    scenario = generate_scenario(cfg, seed=0)
    dt = 1.0 / cfg.frame_rate
    p = scenario.positions
    r = cfg.body.radius
    at_edge = (
        (p[..., 0] <= r + 1e-9) | (p[..., 0] >= cfg.court_length - r - 1e-9)
        | (p[..., 1] <= r + 1e-9) | (p[..., 1] >= cfg.court_width - r - 1e-9)
    )
    vel = np.diff(p, axis=0) / dt
    free = ~(at_edge[1:-1] | at_edge[2:])
    accel = np.linalg.norm(np.diff(vel, axis=0), axis=2) / dt
    assert free.mean() > 0.9
    assert accel[free].max() <= cfg.motion.max_accel + 1e-6

    angle = np.arctan2(vel[..., 1], vel[..., 0])
    turn = np.abs((np.diff(angle, axis=0) + np.pi) % (2 * np.pi) - np.pi)
    speed = np.linalg.norm(vel, axis=2)
    moving = free & (speed[:-1] > 0.1) & (speed[1:] > 0.1)
    assert np.degrees(turn[moving]).max() <= cfg.motion.max_turn_rate_deg * dt + 1e-6


def test_motion_model_rejects_non_positive_limits():
    with pytest.raises(ConfigurationError):
        MotionModel(max_accel=0.0)
    with pytest.raises(ConfigurationError):
        MotionModel(max_turn_rate_deg=-1.0)


def test_crossing_brings_both_players_together():
    cfg = ScenarioConfig(
        player_count=2, duration_s=6.0, court_length=10.0, court_width=6.0,
        crossings=(CrossingEvent(1, 2, 4.5),),
    )
    scenario = generate_scenario(cfg, seed=5)
    meet = scenario.positions_at(46)
    assert np.linalg.norm(meet[0] - meet[1]) < 0.05
    gap = np.linalg.norm(scenario.positions[:, 0] - scenario.positions[:, 1], axis=1)
    assert abs(scenario.timestamp(int(np.argmin(gap)) + 1) - 4.5) <= 0.5
    assert np.linalg.norm(scenario.positions_at(1)[0] - scenario.positions_at(1)[1]) >= cfg.motion.min_spacing


def test_ground_truth_boxes_use_body_footprint():
    scenario = generate_scenario(SMALL, seed=0)
    gt = scenario.ground_truth()
    assert len(gt) == 30 * 4
    assert gt.frames == list(range(1, 31))
    assert {(b.w, b.h) for b in gt} == {(0.6, 0.6)}


@pytest.mark.parametrize(
    "kwargs",
    [
        {"player_count": -1},
        {"duration_s": 0.0},
        {"player_count": 400},
        {"player_count": 2, "crossings": (CrossingEvent(1, 3, 5.0),)},
        {"player_count": 2, "crossings": (CrossingEvent(1, 1, 5.0),)},
        {"player_count": 2, "crossings": (CrossingEvent(1, 2, 25.0),)},
    ],
)
def test_scenario_config_rejects(kwargs):
    with pytest.raises(ConfigurationError):
        ScenarioConfig(**kwargs)


def test_random_crossings():
    cfg = ScenarioConfig(duration_s=30.0)
    events = random_crossings(cfg, 3, seed=2)
    assert len(events) == 3
    assert [e.time_s for e in events] == sorted(e.time_s for e in events)
    assert all(e.player_a < e.player_b for e in events)
    assert random_crossings(cfg, 3, seed=2) == events
    assert random_crossings(cfg, 0) == ()
    with pytest.raises(ConfigurationError):
        random_crossings(ScenarioConfig(duration_s=20.0), 4)


# ── LiDAR ────────────────────────────────────────────────────────────────────

BODY = BodyModel()
ORIGIN = np.array([0.0, 0.0, 1.0])


def test_cast_rays_floor_body_and_sky():
    dirs = np.array([
        [0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    dist, label = cast_rays(ORIGIN, dirs, np.array([[5.0, 0.0]]), BODY, 40.0)
    assert dist[0] == pytest.approx(1.0) and label[0] == FLOOR
    assert dist[1] == pytest.approx(4.7) and label[1] == 0
    assert np.isinf(dist[2]) and label[2] == NO_HIT


def test_cast_rays_nearest_body_hides_the_one_behind():
    dirs = np.array([[1.0, 0.0, 0.0]])
    dist, label = cast_rays(ORIGIN, dirs, np.array([[8.0, 0.0], [5.0, 0.0]]), BODY, 40.0)
    assert label[0] == 1
    dist, label = cast_rays(ORIGIN, dirs, np.array([[8.0, 0.0]]), BODY, 6.0)
    assert label[0] == NO_HIT


def test_cast_rays_hits_top_cap_from_above():
    dist, label = cast_rays(np.array([5.0, 0.0, 3.0]), np.array([[0.0, 0.0, -1.0]]),
                            np.array([[5.0, 0.0]]), BODY, 40.0)
    assert dist[0] == pytest.approx(1.1) and label[0] == 0


def test_scan_directions_are_unit_vectors():
    dirs = scan_directions(LidarSpec(h_resolution_deg=5.0, v_resolution_deg=5.0, h_fov_deg=10.0, v_fov_deg=10.0))
    assert dirs.shape == (9, 3)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0)


def test_lidar_returns_label_player_ids():
    scenario = generate_scenario(SMALL, seed=2)
    rig = default_rigs()[0]
    returns = lidar_returns(scenario, rig, 1)
    ids = set(returns.labels[returns.labels >= 0].tolist())
    assert ids <= set(scenario.ids) and ids
    assert returns.cloud().frame_id == rig.name
    again = lidar_returns(scenario, rig, 1)
    np.testing.assert_array_equal(returns.points, again.points)


def _placed(*centers: tuple[float, float]) -> Scenario:
    positions = np.array([list(centers)], dtype=float).reshape(1, len(centers), 2)
    return Scenario(ScenarioConfig(player_count=len(centers)), 0, tuple(range(1, len(centers) + 1)),
                    positions, np.zeros((1, len(centers))))


def _world_points(scenario: Scenario, rig, label: int) -> np.ndarray:
    returns = lidar_returns(scenario, rig, 1)
    return rig.lidar_pose().apply_points(returns.points[returns.labels == label])


def test_empty_court_returns_only_floor():
    rig = default_rigs()[0]
    returns = lidar_returns(_placed(), rig, 1)
    assert set(returns.labels.tolist()) == {FLOOR}
    world = rig.lidar_pose().apply_points(returns.points)
    assert np.abs(world[:, 2]).max() < 0.1


def test_lone_player_cluster_sits_on_its_footprint():
    # rig1 stands at (14, -1.5) facing +y; the player is 10 m in front of it.
    rig = default_rigs()[0]
    pts = _world_points(_placed((14.0, 8.5)), rig, 1)
    assert len(pts) >= 10
    cx, cy = pts[:, :2].mean(axis=0)
    assert abs(cx - 14.0) <= 0.1
    assert 8.5 - 0.3 <= cy <= 8.5
    assert pts[:, 2].min() >= -0.1 and pts[:, 2].max() <= 1.9 + 0.1


def test_player_behind_another_is_mostly_shadowed():
    rig = default_rigs()[0]
    alone = len(_world_points(_placed((14.0, 9.5)), rig, 1))
    shadowed = len(_world_points(_placed((14.0, 9.5), (14.0, 6.5)), rig, 1))
    assert alone > 100
    assert shadowed < 0.3 * alone


# ── Camera ground truth ──────────────────────────────────────────────────────

def test_union_area_and_visibility():
    a, b = PixelBox(0, 0, 10, 10), PixelBox(5, 0, 10, 10)
    assert union_area([a, b]) == 150.0
    assert union_area([]) == 0.0
    assert visible_fraction(a, [b]) == pytest.approx(0.5)
    assert visible_fraction(a, [PixelBox(-5, -5, 30, 30)]) == 0.0


def test_union_area_matches_pixel_coverage(rng):
    for _ in range(50):
        boxes = []
        mask = np.zeros((60, 60), dtype=bool)
        for _ in range(int(rng.integers(1, 6))):
            x, y = rng.integers(0, 40, size=2)
            w, h = rng.integers(1, 20, size=2)
            boxes.append(PixelBox(int(x), int(y), int(w), int(h)))
            mask[y:y + h, x:x + w] = True
        assert union_area(boxes) == mask.sum()


def test_far_player_hidden_behind_near_one():
    camera = CameraModel.from_fov((-3.0, 7.5, 1.0), 0.0, 0.0, (1000, 800), (90.0, 90.0), "end")
    positions = np.array([[[5.0, 7.5], [10.0, 7.5]]])
    scenario = Scenario(ScenarioConfig(player_count=2), 0, (1, 2), positions, np.zeros((1, 2)))
    near, far = render_camera_gt(scenario, camera, 1)
    assert (near.gt_id, far.gt_id) == (1, 2)
    assert near.visibility == 1.0
    assert far.visibility == pytest.approx(0.0)
    assert far.box.area < near.box.area


# ── Embeddings ───────────────────────────────────────────────────────────────

def test_noiseless_orthogonal_embedding_is_the_anchor():
    model = EmbeddingModel(dim=8, base_sigma=0.0, anchors="orthogonal")
    vec = synth_embedding(10, 1.0, seed=0, model=model)
    np.testing.assert_allclose(vec.values, np.eye(8)[2])


def test_random_anchors_are_nearly_orthogonal():
    model = EmbeddingModel(dim=128, base_sigma=0.0)
    vectors = [synth_embedding(i, 1.0, seed=4, model=model).values for i in range(1, 6)]
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            assert abs(vectors[i] @ vectors[j]) < 0.3


def test_embedding_noise_grows_as_visibility_drops():
    model = EmbeddingModel(dim=64, base_sigma=0.2)
    assert model.sigma(0.5, 8) == pytest.approx(0.2 * 2.0 * 2.0)

    def mean_cos(visibility: float) -> float:
        anchor = synth_embedding(3, 1.0, 9, EmbeddingModel(dim=64, base_sigma=0.0)).values
        return float(np.mean([synth_embedding(3, visibility, 9, model, draw=d).values @ anchor for d in range(40)]))

    assert mean_cos(1.0) > mean_cos(0.1)
    with pytest.raises(DataError):
        synth_embedding(3, 1.5, 9, model)


# ── Export ───────────────────────────────────────────────────────────────────

def test_write_scenario_layout(tmp_path):
    cfg = ScenarioConfig(player_count=2, duration_s=0.3, rigs=default_rigs(COARSE))
    scenario = generate_scenario(cfg, seed=1)
    events: list[dict] = []
    counts = write_scenario(tmp_path, scenario, embeddings=EmbeddingModel(dim=8), progress_callback=events.append)

    assert counts["frames"] == 3 and counts["players"] == 2
    assert (tmp_path / "gt.txt").is_file()
    for rig in cfg.rigs:
        assert cloud_path(tmp_path, rig.name, 3).is_file()
        assert (tmp_path / "camera_gt" / f"{rig.name}.txt").is_file()
        assert (tmp_path / "camera_dets" / f"{rig.name}.txt").is_file()
    assert counts["embeddings"] == sum(counts[f"camera_gt.{r.name}"] for r in cfg.rigs)
    assert all(e["stage"] == "simulate" for e in events)
