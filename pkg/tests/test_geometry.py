from __future__ import annotations

import math

import numpy as np
import pytest

from court_fusion.errors import (
    BehindCameraError,
    ConfigurationError,
    DegenerateGeometryError,
    EmptyInputError,
    FrameError,
    InvalidTransformError,
)
from court_fusion.geometry.bev import (
    BevBox,
    BevGrid,
    Voxel3D,
    box_from_world,
    box_to_world,
    rasterize_bev,
    voxelize,
)
from court_fusion.geometry.camera import CameraModel, look_at_extrinsics, project
from court_fusion.geometry.region import CourtRegion, filter_region
from court_fusion.geometry.transforms import PointCloud, RigidTransform, apply_transform, merge_clouds
from court_fusion.simulator.rigs import RigSpec


# ── Transforms ───────────────────────────────────────────────────────────────

def test_rigid_transform_rejects_non_orthonormal_rotation():
    with pytest.raises(InvalidTransformError):
        RigidTransform(np.diag([1.0, 1.0, 2.0]), np.zeros(3))


def test_rigid_transform_rejects_reflection():
    with pytest.raises(InvalidTransformError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_compose_with_inverse_is_identity():
    T = RigidTransform.from_euler(30.0, -10.0, 5.0, (1.0, 2.0, 3.0))
    pts = np.array([[0.0, 0.0, 0.0], [1.0, -2.0, 0.5]])
    roundtrip = T.inverse().compose(T)
    np.testing.assert_allclose(roundtrip.apply_points(pts), pts, atol=1e-9)


def test_random_transforms_round_trip_through_their_inverse(rng):
    for _ in range(1000):
        yaw, pitch, roll = rng.uniform(-180.0, 180.0, size=3)
        T = RigidTransform.from_euler(yaw, pitch, roll, rng.uniform(-50.0, 50.0, size=3))
        pts = rng.uniform(-30.0, 30.0, size=(5, 3))
        np.testing.assert_allclose(T.inverse().apply_points(T.apply_points(pts)), pts, atol=1e-9)
        np.testing.assert_allclose(T.inverse().compose(T).apply_points(pts), pts, atol=1e-9)


def test_apply_transform_yaw_90_maps_x_to_y():
    cloud = PointCloud("rig", 0.0, [[1.0, 0.0, 0.0]])
    out = apply_transform(cloud, RigidTransform.from_euler(yaw_deg=90.0, translation=(5.0, 0.0, 0.0)))
    assert out.frame_id == "world"
    np.testing.assert_allclose(out.points, [[5.0, 1.0, 0.0]], atol=1e-12)


def test_point_cloud_rejects_nan():
    with pytest.raises(FrameError):
        PointCloud("rig", 0.0, [[math.nan, 0.0, 0.0]])


def test_merge_clouds_conserves_points_and_takes_earliest_timestamp():
    a = PointCloud("a", 0.02, np.ones((4, 3)))
    b = PointCloud("b", 0.00, np.zeros((3, 3)))
    merged = merge_clouds([a, b], [RigidTransform.identity(), RigidTransform.identity()])
    assert len(merged) == 7
    assert merged.timestamp == 0.0
    np.testing.assert_array_equal(merged.points[:4], np.ones((4, 3)))


def test_merge_clouds_rejects_empty_and_mismatched_inputs():
    with pytest.raises(EmptyInputError):
        merge_clouds([], [])
    cloud = PointCloud("a", 0.0, np.zeros((1, 3)))
    with pytest.raises(FrameError):
        merge_clouds([cloud], [])


def test_merge_clouds_rejects_timestamp_spread_over_one_period():
    a = PointCloud("a", 0.0, np.zeros((1, 3)))
    b = PointCloud("b", 0.25, np.zeros((1, 3)))
    with pytest.raises(FrameError):
        merge_clouds([a, b], [RigidTransform.identity()] * 2)


def test_merge_clouds_rejects_pose_not_targeting_world():
    cloud = PointCloud("a", 0.0, np.zeros((1, 3)))
    with pytest.raises(FrameError):
        merge_clouds([cloud], [RigidTransform.identity("rig")])


# ── Region ───────────────────────────────────────────────────────────────────

def test_filter_region_is_boundary_inclusive_and_keeps_order():
    region = CourtRegion.rectangle(z_range=(0.2, 2.3))
    pts = np.array([
        [0.0, 0.0, 0.2],      # corner, bottom of band
        [28.0, 15.0, 2.3],    # far corner, top of band
        [10.0, 5.0, 0.1],     # floor
        [10.0, 5.0, 2.5],     # backboard height
        [-0.01, 5.0, 1.0],    # just outside
        [14.0, 7.5, 1.0],
    ])
    out = filter_region(PointCloud("world", 0.0, pts), region)
    np.testing.assert_array_equal(out.points, pts[[0, 1, 5]])


def test_region_rejects_degenerate_polygon_and_z_range():
    with pytest.raises(ConfigurationError):
        CourtRegion(np.array([[0, 0], [1, 1], [2, 2]]))
    with pytest.raises(ConfigurationError):
        CourtRegion.rectangle(z_range=(2.0, 1.0))


def test_region_accepts_clockwise_polygon():
    region = CourtRegion(np.array([[0, 0], [0, 1], [1, 1], [1, 0]]), (0.0, 1.0))
    assert region.contains(np.array([[0.5, 0.5, 0.5]]))[0]


def test_region_half_planes_handle_a_rotated_polygon():
    diamond = CourtRegion(np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]), (0.0, 1.0))
    pts = np.array([
        [0.0, 0.0, 0.5],
        [0.5, 0.5, 0.5],     # on an edge
        [0.0, 1.0, 0.5],     # vertex
        [0.6, 0.6, 0.5],
        [0.9, 0.9, 0.5],     # inside the bounding box, outside the diamond
        [0.0, 0.0, 1.5],
    ])
    np.testing.assert_array_equal(diamond.contains(pts), [True, True, True, False, False, False])


# ── BEV ──────────────────────────────────────────────────────────────────────

def test_default_grid_covers_court_with_margin(grid):
    assert grid.shape == (340, 600)
    assert grid.origin == (-1.0, -1.0)


def test_rasterize_counts_every_in_grid_point(grid):
    pts = np.array([[0.01, 0.01, 1.0], [0.02, 0.02, 1.0], [27.99, 14.99, 1.0], [100.0, 0.0, 1.0]])
    image = rasterize_bev(PointCloud("world", 0.0, pts), grid)
    assert image.sum() == 3
    col, row = grid.world_to_cell([[0.01, 0.01]])[0]
    assert image[row, col] == 2


def test_rasterize_empty_cloud_is_zero_image(grid):
    image = rasterize_bev(PointCloud("world", 0.0, np.zeros((0, 3))), grid)
    assert image.shape == grid.shape
    assert not image.any()


def test_rasterize_requires_grid():
    with pytest.raises(ConfigurationError):
        rasterize_bev(PointCloud("world", 0.0, np.zeros((1, 3))), None)


def test_grid_rejects_zero_resolution():
    with pytest.raises(ConfigurationError):
        BevGrid(resolution=0.0)


def test_world_point_lies_in_its_cell(grid, rng):
    xy = rng.uniform([-1.0, -1.0], [28.9, 15.9], size=(200, 2))
    lower = grid.cell_to_world(grid.world_to_cell(xy))
    assert np.all(lower <= xy + 1e-12)
    assert np.all(xy < lower + grid.resolution + 1e-12)
    assert grid.in_grid(grid.world_to_cell(xy)).all()


def test_box_world_roundtrip_on_cell_edges(grid):
    box = box_from_world((1.0, 2.0, 1.6, 2.6), grid)
    assert (box.x, box.y, box.w, box.h) == (40, 60, 12, 12)
    np.testing.assert_allclose(box_to_world(box, grid), (1.0, 2.0, 1.6, 2.6))


def test_box_from_world_outside_grid_is_none(grid):
    assert box_from_world((100.0, 100.0, 101.0, 101.0), grid) is None


def test_voxelize_extrudes_footprint(grid):
    voxel = voxelize(BevBox(40, 60, 12, 12), grid, (0.2, 2.3))
    lo, hi = voxel.bounds
    np.testing.assert_allclose(lo, (1.0, 2.0, 0.2))
    np.testing.assert_allclose(hi, (1.6, 2.6, 2.3))
    assert voxel.corners.shape == (8, 3)


def test_voxelize_rejects_zero_area(grid):
    with pytest.raises(DegenerateGeometryError):
        voxelize(BevBox(10, 10, 0, 5), grid, (0.2, 2.3))


# ── Camera ───────────────────────────────────────────────────────────────────

def _camera() -> CameraModel:
    # Beyond the x = 0 baseline, looking along +x, level.
    return CameraModel.from_fov((-3.0, 7.5, 1.0), 0.0, 0.0, (1000, 800), (90.0, 90.0), "cam")


def test_point_on_optical_axis_projects_to_principal_point():
    pixels, depth = _camera().project_points(np.array([[7.0, 7.5, 1.0]]))
    np.testing.assert_allclose(pixels[0], (500.0, 400.0), atol=1e-9)
    assert depth[0] == pytest.approx(10.0)


def test_project_voxel_boxes_the_corners(grid):
    cam = _camera()
    voxel = voxelize(box_from_world((6.7, 7.2, 7.3, 7.8), grid), grid, (0.2, 1.8))
    projected = project(voxel, cam)
    assert projected.visible
    box = projected.box
    assert box.x < 500.0 < box.x1
    assert box.y < 400.0 < box.y1
    # A nearer voxel of the same size projects larger.
    near = project(voxelize(box_from_world((2.7, 7.2, 3.3, 7.8), grid), grid, (0.2, 1.8)), cam)
    assert near.unclamped_area > projected.unclamped_area


def test_projected_box_contains_every_point_of_the_voxel(grid, rng):
    cam = _camera()
    voxel = voxelize(box_from_world((6.7, 7.2, 7.3, 7.8), grid), grid, (0.2, 1.8))
    box = project(voxel, cam).unclamped
    lo, hi = voxel.corners.min(axis=0), voxel.corners.max(axis=0)
    pixels, depth = cam.project_points(rng.uniform(lo, hi, size=(5000, 3)))
    assert np.all(depth > 0)
    assert np.all(pixels[:, 0] >= box.x - 1e-9) and np.all(pixels[:, 0] <= box.x1 + 1e-9)
    assert np.all(pixels[:, 1] >= box.y - 1e-9) and np.all(pixels[:, 1] <= box.y1 + 1e-9)


def test_one_metre_at_ten_metres_spans_focal_over_ten_pixels():
    K = np.array([[1000.0, 0.0, 1000.0], [0.0, 1000.0, 1000.0], [0.0, 0.0, 1.0]])
    cam = CameraModel(K, look_at_extrinsics((0.0, 0.0, 1.0), 0.0, 0.0), (2000, 2000))
    projected = project(Voxel3D.from_bounds(10.0, -0.25, 10.5, 0.25, (0.5, 1.5)), cam)
    assert projected.unclamped.h == pytest.approx(100.0)
    assert projected.unclamped.w == pytest.approx(50.0)


@pytest.mark.parametrize("pitch", [90.0, -90.0, 120.0])
def test_camera_pitch_outside_open_quarter_turn_is_rejected(pitch):
    with pytest.raises(ConfigurationError):
        look_at_extrinsics((0.0, 0.0, 2.0), 0.0, pitch)
    with pytest.raises(ConfigurationError):
        RigSpec("rig1", (0.0, 0.0, 2.0), 0.0, camera_pitch_deg=pitch)


def test_project_behind_camera_raises():
    voxel = Voxel3D.from_bounds(-6.0, 7.0, -5.4, 7.6, (0.2, 1.8))
    with pytest.raises(BehindCameraError):
        project(voxel, _camera())


def test_project_outside_image_has_no_clamped_box(grid):
    voxel = voxelize(box_from_world((5.0, 14.0, 5.6, 14.6), grid), grid, (0.2, 1.8))
    cam = CameraModel.from_fov((-3.0, 7.5, 1.0), 0.0, 0.0, (1000, 800), (20.0, 20.0), "narrow")
    projected = project(voxel, cam)
    assert projected.box is None
    assert not projected.visible
