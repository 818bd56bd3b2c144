"""
Discovery and loading of an on-disk sequence directory.

    clouds/<rig>/<frame:06d>.xyz
    gt.txt
    camera_gt/<rig>.txt
    camera_dets/<rig>.txt
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterator, Sequence

from ..detection.base import DetectionSet
from ..errors import EmptyInputError, SequencingError
from ..geometry.transforms import PointCloud
from .formats import read_camera_gt, read_cloud, read_detections
from .records import CameraGtBox

logger = logging.getLogger(__name__)


def discover_frames(clouds_dir: str | Path, rig_names: Sequence[str]) -> list[int]:
    """Sorted frame indices with a scan from at least one rig."""
    clouds_dir = Path(clouds_dir)
    if not clouds_dir.is_dir():
        raise EmptyInputError(f"no point cloud directory at {clouds_dir}")
    found: dict[str, set[int]] = {}
    for rig in rig_names:
        rig_dir = clouds_dir / rig
        found[rig] = {int(p.stem) for p in rig_dir.glob("*.xyz") if p.stem.isdigit()} if rig_dir.is_dir() else set()
        if not found[rig]:
            logger.warning("rig %s has no scans under %s", rig, rig_dir)
    frames = sorted(set().union(*found.values())) if found else []
    if not frames:
        raise EmptyInputError(f"no point clouds found under {clouds_dir}")
    for rig, have in found.items():
        if have and len(have) < len(frames):
            logger.warning("rig %s is missing %d of %d frame(s)", rig, len(frames) - len(have), len(frames))
    return frames


class CloudSequence:
    """Per-frame scans of every rig, read lazily in frame order."""

    def __init__(self, clouds_dir: str | Path, rig_names: Sequence[str]):
        self.clouds_dir = Path(clouds_dir)
        self.rig_names = list(rig_names)
        self.frames = discover_frames(self.clouds_dir, self.rig_names)

    def __len__(self) -> int:
        return len(self.frames)

    def load(self, frame: int) -> list[tuple[int, PointCloud]]:
        """``(rig_index, cloud)`` for every rig that scanned *frame*."""
        out = []
        for index, rig in enumerate(self.rig_names):
            path = self.clouds_dir / rig / f"{frame:06d}.xyz"
            if path.exists():
                out.append((index, read_cloud(path)))
        return out

    def __iter__(self) -> Iterator[tuple[int, list[tuple[int, PointCloud]]]]:
        last_stamp = None
        for frame in self.frames:
            clouds = self.load(frame)
            stamp = min(c.timestamp for _, c in clouds)
            if last_stamp is not None and stamp <= last_stamp:
                raise SequencingError(f"frame {frame}: timestamp {stamp} does not follow {last_stamp}")
            last_stamp = stamp
            yield frame, clouds


def load_camera_truth(directory: str | Path | None, rig_names: Sequence[str]) -> dict[int, dict[int, list[CameraGtBox]]]:
    """``{camera_index: {frame: boxes}}``; cameras without a file are left out."""
    out: dict[int, dict[int, list[CameraGtBox]]] = {}
    if directory is None:
        return out
    directory = Path(directory)
    for index, rig in enumerate(rig_names):
        path = directory / f"{rig}.txt"
        if path.exists():
            out[index] = read_camera_gt(path)
    if not out:
        logger.info("no camera ground truth under %s", directory)
    return out


def load_camera_detections(
    directory: str | Path | None,
    rig_names: Sequence[str],
    frame_period: float,
) -> dict[int, dict[int, DetectionSet]]:
    """``{camera_index: {frame: DetectionSet}}`` in pixel units."""
    out: dict[int, dict[int, DetectionSet]] = {}
    if directory is None:
        return out
    directory = Path(directory)
    for index, rig in enumerate(rig_names):
        path = directory / f"{rig}.txt"
        if path.exists():
            out[index] = read_detections(path, "pixel", frame_period)
    return out
