from __future__ import annotations

import numpy as np
import pytest

from court_fusion.errors import DataError, EmptyInputError, ParseError, SequencingError
from court_fusion.geometry.camera import PixelBox
from court_fusion.geometry.transforms import PointCloud
from court_fusion.ingestion.formats import (
    read_camera_gt,
    read_cloud,
    read_detections,
    read_embeddings,
    read_ground_truth,
    read_tracks,
    write_cloud,
)
from court_fusion.ingestion.sources import CloudSequence, load_camera_detections, load_camera_truth


def _file(tmp_path, name: str, text: str):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _line_no(exc_info) -> int:
    return exc_info.value.line_no


# ── Text formats ─────────────────────────────────────────────────────────────

def test_ground_truth_skips_comments_and_blank_lines(tmp_path):
    path = _file(tmp_path, "gt.txt", "# t id cx cy w h\n\n1 1 5.0 5.0 0.6 0.6\n1 2 8.0 5.0 0.6 0.6\n2 1 5.1 5.0 0.6 0.6\n")
    gt = read_ground_truth(path)
    assert len(gt) == 3
    assert gt.frames == [1, 2]
    assert gt.ids == [1, 2]
    assert gt[2][0].cx == 5.1


@pytest.mark.parametrize(
    "text, line_no",
    [
        ("1 1 5.0 5.0 0.6 0.6\n1 1 5.0\n", 2),
        ("1 1 5.0 5.0 0.6 0.6\n\n1 1 6.0 5.0 0.6 0.6\n", 3),
        ("0 1 5.0 5.0 0.6 0.6\n", 1),
        ("# header\n1 one 5.0 5.0 0.6 0.6\n", 2),
    ],
)
def test_ground_truth_errors_name_the_line(tmp_path, text, line_no):
    with pytest.raises(ParseError) as exc_info:
        read_ground_truth(_file(tmp_path, "gt.txt", text))
    assert _line_no(exc_info) == line_no
    assert f"gt.txt:{line_no}:" in str(exc_info.value)


def test_tracks_reject_duplicates_and_non_finite_values(tmp_path):
    table = read_tracks(_file(tmp_path, "a.txt", "1 3 5.0 5.0 0.6 0.6\n2 3 5.1 5.0 0.6 0.6\n"))
    assert table.ids == [3]
    with pytest.raises(ParseError) as exc_info:
        read_tracks(_file(tmp_path, "b.txt", "1 3 5.0 5.0 0.6 0.6\n1 3 5.1 5.0 0.6 0.6\n"))
    assert _line_no(exc_info) == 2
    with pytest.raises(ParseError):
        read_tracks(_file(tmp_path, "c.txt", "1 3 nan 5.0 0.6 0.6\n"))


def test_missing_file_is_a_data_error(tmp_path):
    with pytest.raises(DataError):
        read_tracks(tmp_path / "absent.txt")


def test_cloud_header_and_rows(tmp_path):
    cloud = PointCloud("rig1", 0.2, np.array([[1.0, 2.0, 0.5], [3.0, -1.0, 1.25]]))
    path = tmp_path / "000003.xyz"
    write_cloud(path, cloud)
    again = read_cloud(path)
    assert (again.frame_id, again.timestamp) == ("rig1", 0.2)
    np.testing.assert_allclose(again.points, cloud.points)

    write_cloud(path, PointCloud("rig1", 0.3, np.zeros((0, 3))))
    assert read_cloud(path).points.shape == (0, 3)

    with pytest.raises(ParseError) as exc_info:
        read_cloud(_file(tmp_path, "bad.xyz", "1 2 3\n"))
    assert _line_no(exc_info) == 1
    with pytest.raises(ParseError) as exc_info:
        read_cloud(_file(tmp_path, "bad.xyz", "frame=rig1 t=0.1\n1 2 3\n1 2\n"))
    assert _line_no(exc_info) == 3


def test_pixel_detections(tmp_path):
    path = _file(tmp_path, "dets.txt", "2 -1 10 20 30 40 0.9\n2 5 50 20 30 40 0.4\n4 -1 0 0 10 10 1.0\n")
    sets = read_detections(path, "pixel", frame_period=0.1)
    assert sorted(sets) == [2, 4]
    assert sets[2].boxes[0] == PixelBox(10, 20, 30, 40, 0.9)
    assert sets[2].id_hints == (-1, 5)
    assert sets[4].timestamp == pytest.approx(0.3)
    with pytest.raises(ParseError):
        read_detections(_file(tmp_path, "bad.txt", "1 -1 0 0 10 10 1.5\n"), "pixel")
    with pytest.raises(DataError):
        read_detections(path, "meters")


def test_camera_gt_visibility_range(tmp_path):
    boxes = read_camera_gt(_file(tmp_path, "rig1.txt", "1 4 10 20 30 40 0.75\n"))
    assert boxes[1][0].gt_id == 4 and boxes[1][0].visibility == 0.75
    with pytest.raises(ParseError):
        read_camera_gt(_file(tmp_path, "rig1.txt", "1 4 10 20 30 40 1.2\n"))


def test_embeddings_share_one_dimension(tmp_path):
    vectors = read_embeddings(_file(tmp_path, "emb.txt", "7 3 0 3 4\n7 4 1 0 2\n"))
    np.testing.assert_allclose(vectors[(7, 3, 0)].values, [0.6, 0.8])
    with pytest.raises(ParseError) as exc_info:
        read_embeddings(_file(tmp_path, "emb.txt", "7 3 0 3 4\n7 4 1 0 2 1\n"))
    assert _line_no(exc_info) == 2
    with pytest.raises(ParseError):
        read_embeddings(_file(tmp_path, "emb.txt", "7 3 0 0 0\n"))


# ── Sequence directories ─────────────────────────────────────────────────────

def _scan(root, rig: str, frame: int, t: float):
    write_cloud(root / "clouds" / rig / f"{frame:06d}.xyz", PointCloud(rig, t, np.ones((2, 3))))


def test_cloud_sequence_unions_rig_frames(tmp_path):
    _scan(tmp_path, "rig1", 1, 0.0)
    _scan(tmp_path, "rig1", 2, 0.1)
    _scan(tmp_path, "rig2", 2, 0.1)
    seq = CloudSequence(tmp_path / "clouds", ["rig1", "rig2"])
    assert seq.frames == [1, 2]
    assert [index for index, _ in seq.load(1)] == [0]
    assert [(frame, len(clouds)) for frame, clouds in seq] == [(1, 1), (2, 2)]


def test_cloud_sequence_requires_increasing_timestamps(tmp_path):
    _scan(tmp_path, "rig1", 1, 0.5)
    _scan(tmp_path, "rig1", 2, 0.1)
    with pytest.raises(SequencingError):
        list(CloudSequence(tmp_path / "clouds", ["rig1"]))


def test_cloud_sequence_without_scans(tmp_path):
    (tmp_path / "clouds" / "rig1").mkdir(parents=True)
    with pytest.raises(EmptyInputError):
        CloudSequence(tmp_path / "clouds", ["rig1"])
    with pytest.raises(EmptyInputError):
        CloudSequence(tmp_path / "elsewhere", ["rig1"])


def test_camera_files_are_optional(tmp_path):
    _file(tmp_path, "rig2.txt", "1 4 10 20 30 40 0.75\n")
    assert load_camera_truth(None, ["rig1"]) == {}
    truth = load_camera_truth(tmp_path, ["rig1", "rig2"])
    assert list(truth) == [1]
    dets = load_camera_detections(tmp_path, ["rig1", "rig2"], 0.1)
    assert list(dets) == [1]
