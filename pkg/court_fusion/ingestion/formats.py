"""
Line-delimited text formats read and written by the pipeline.

    cloud           header ``frame=<name> t=<seconds>``, then ``x y z`` per line
    ground truth    ``t gt_id cx cy w h``                (world meters)
    camera gt       ``t gt_id x y w h visibility``      (pixels)
    detections      ``t id_hint x y w h conf``          (cells or pixels)
    tracks          ``t id cx cy w h``                   (world meters)
    embeddings      ``id t camera v1 .. vd``

``t`` is the 1-based frame index everywhere except the cloud header, which
carries the acquisition time in seconds. Blank lines and lines starting with
``#`` are ignored. Malformed lines raise ``ParseError`` with the line number.
"""

from __future__ import annotations

import re
from collections import defaultdict
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ..detection.base import DetectionSet
from ..errors import DataError, ParseError
from ..fusion.reid import EmbeddingVector
from ..geometry.bev import BevBox
from ..geometry.camera import PixelBox
from ..geometry.transforms import PointCloud
from ..tracking.tracker import TrackRecord, TrackTable
from .records import CameraGtBox, GroundTruthBox, GroundTruthSequence

_HEADER_RE = re.compile(r"^frame=(?P<frame>\S+)\s+t=(?P<t>\S+)\s*$")


def iter_rows(path: str | Path, min_fields: int) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_no, fields)`` for every data line of *path*."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if len(fields) < min_fields:
                raise ParseError(path, line_no, f"expected {min_fields} fields, got {len(fields)}")
            yield line_no, fields


def _parse(path: Path, line_no: int, fn: Callable, *args):
    try:
        return fn(*args)
    except (ValueError, DataError) as exc:
        raise ParseError(path, line_no, str(exc)) from exc


def _frame(value: str) -> int:
    frame = int(value)
    if frame < 1:
        raise ValueError(f"frame index must be >= 1, got {frame}")
    return frame


# ── Point clouds ─────────────────────────────────────────────────────────────

def write_cloud(path: str | Path, cloud: PointCloud) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"frame={cloud.frame_id} t={cloud.timestamp:.6f}\n")
        if len(cloud):
            np.savetxt(fh, cloud.points, fmt="%.6f")


def read_cloud(path: str | Path) -> PointCloud:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(path, 1, "missing 'frame=<name> t=<seconds>' header")
    match = _HEADER_RE.match(lines[0].strip())
    if not match:
        raise ParseError(path, 1, "missing 'frame=<name> t=<seconds>' header")
    timestamp = _parse(path, 1, float, match.group("t"))

    points = []
    for line_no, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 3:
            raise ParseError(path, line_no, f"expected 'x y z', got {len(fields)} field(s)")
        points.append(_parse(path, line_no, lambda f: [float(v) for v in f], fields))
    return _parse(path, 1, PointCloud, match.group("frame"), timestamp, np.asarray(points).reshape(-1, 3))


# ── Ground truth ─────────────────────────────────────────────────────────────

def write_ground_truth(path: str | Path, gt: GroundTruthSequence) -> None:
    lines = [f"{b.frame} {b.gt_id} {b.cx:.4f} {b.cy:.4f} {b.w:.4f} {b.h:.4f}" for b in gt]
    _write_lines(path, lines)


def read_ground_truth(path: str | Path) -> GroundTruthSequence:
    path = Path(path)
    seq = GroundTruthSequence()
    for line_no, f in iter_rows(path, 6):
        box = _parse(path, line_no, lambda: GroundTruthBox(
            _frame(f[0]), int(f[1]), float(f[2]), float(f[3]), float(f[4]), float(f[5])
        ))
        _parse(path, line_no, seq.add, box)
    return seq


def write_camera_gt(path: str | Path, boxes: Iterable[CameraGtBox]) -> None:
    lines = [
        f"{c.frame} {c.gt_id} {c.box.x:.2f} {c.box.y:.2f} {c.box.w:.2f} {c.box.h:.2f} {c.visibility:.4f}"
        for c in boxes
    ]
    _write_lines(path, lines)


def read_camera_gt(path: str | Path) -> dict[int, list[CameraGtBox]]:
    path = Path(path)
    out: dict[int, list[CameraGtBox]] = defaultdict(list)
    for line_no, f in iter_rows(path, 7):
        record = _parse(path, line_no, lambda: CameraGtBox(
            _frame(f[0]),
            int(f[1]),
            PixelBox(float(f[2]), float(f[3]), float(f[4]), float(f[5])),
            float(f[6]),
        ))
        if not 0.0 <= record.visibility <= 1.0:
            raise ParseError(path, line_no, f"visibility {record.visibility} outside [0, 1]")
        out[record.frame].append(record)
    return dict(out)


# ── Detections ───────────────────────────────────────────────────────────────

def write_detections(path: str | Path, sets: Iterable[DetectionSet]) -> None:
    lines = []
    for dets in sets:
        for box, hint in zip(dets.boxes, dets.id_hints):
            lines.append(
                f"{dets.frame} {hint} {box.x:.2f} {box.y:.2f} {box.w:.2f} {box.h:.2f} {box.confidence:.4f}"
            )
    _write_lines(path, lines)


def read_detections(
    path: str | Path,
    unit: str = "bev",
    frame_period: float = 0.1,
) -> dict[int, DetectionSet]:
    """Replay file → ``{frame: DetectionSet}``; *unit* is ``bev`` or ``pixel``."""
    path = Path(path)
    if unit not in ("bev", "pixel"):
        raise DataError(f"unknown detection unit '{unit}'")
    box_type = BevBox if unit == "bev" else PixelBox
    boxes: dict[int, list] = defaultdict(list)
    hints: dict[int, list[int]] = defaultdict(list)
    for line_no, f in iter_rows(path, 7):
        frame = _parse(path, line_no, _frame, f[0])
        box = _parse(path, line_no, lambda: box_type(
            float(f[2]), float(f[3]), float(f[4]), float(f[5]), float(f[6])
        ))
        if not 0.0 <= box.confidence <= 1.0:
            raise ParseError(path, line_no, f"confidence {box.confidence} outside [0, 1]")
        boxes[frame].append(box)
        hints[frame].append(_parse(path, line_no, int, f[1]))
    return {
        frame: DetectionSet((frame - 1) * frame_period, tuple(boxes[frame]), frame, tuple(hints[frame]))
        for frame in sorted(boxes)
    }


# ── Tracks ───────────────────────────────────────────────────────────────────

def write_tracks(path: str | Path, table: TrackTable) -> None:
    lines = [f"{r.frame} {r.id} {r.cx:.4f} {r.cy:.4f} {r.w:.4f} {r.h:.4f}" for r in table]
    _write_lines(path, lines)


def read_tracks(path: str | Path) -> TrackTable:
    path = Path(path)
    records = []
    seen: set[tuple[int, int]] = set()
    for line_no, f in iter_rows(path, 6):
        record = _parse(path, line_no, lambda: TrackRecord(
            _frame(f[0]), int(f[1]), float(f[2]), float(f[3]), float(f[4]), float(f[5])
        ))
        if not all(np.isfinite([record.cx, record.cy, record.w, record.h])):
            raise ParseError(path, line_no, "non-finite coordinates")
        key = (record.frame, record.id)
        if key in seen:
            raise ParseError(path, line_no, f"track id {record.id} appears twice in frame {record.frame}")
        seen.add(key)
        records.append(record)
    return TrackTable(records)


def _write_lines(path: str | Path, lines: Sequence[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


# ── Embeddings ───────────────────────────────────────────────────────────────

def write_embeddings(path: str | Path, rows: Iterable[tuple[int, int, int, EmbeddingVector]]) -> None:
    """Write ``id t camera v1 .. vd`` lines."""
    lines = [
        f"{ident} {t} {camera} " + " ".join(f"{v:.6f}" for v in vec.values)
        for ident, t, camera, vec in rows
    ]
    _write_lines(path, lines)


def read_embeddings(path: str | Path) -> dict[tuple[int, int, int], EmbeddingVector]:
    """Embedding file → ``{(id, t, camera): EmbeddingVector}``; every row must share one dimension."""
    path = Path(path)
    out: dict[tuple[int, int, int], EmbeddingVector] = {}
    dim = None
    for line_no, f in iter_rows(path, 5):
        if dim is None:
            dim = len(f) - 3
        elif len(f) - 3 != dim:
            raise ParseError(path, line_no, f"expected {dim} embedding values, got {len(f) - 3}")
        key = _parse(path, line_no, lambda: (int(f[0]), _frame(f[1]), int(f[2])))
        out[key] = _parse(path, line_no, lambda: EmbeddingVector(np.array([float(v) for v in f[3:]])))
    return out
