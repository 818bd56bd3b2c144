"""
Write a simulated scenario in the on-disk layout the pipeline reads:

    clouds/<rig>/<frame:06d>.xyz   one LiDAR scan per rig and frame (sensor frame)
    gt.txt                         BEV ground truth
    camera_gt/<rig>.txt            camera ground truth with visibility
    camera_dets/<rig>.txt          simulated person detections (pixels)
    embeddings.txt                 optional appearance vectors keyed by GT id
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Callable

from ..detection.base import DetectorFrame
from ..detection.oracle import CameraNoiseModel, CameraOracleDetector
from ..ingestion.formats import (
    write_camera_gt,
    write_cloud,
    write_detections,
    write_embeddings,
    write_ground_truth,
)
from .camera_gt import render_camera_gt
from .embeddings import EmbeddingModel, synth_embedding
from .lidar import sample_lidar
from .scenario import Scenario

logger = logging.getLogger(__name__)


def cloud_path(directory: Path, rig: str, frame: int) -> Path:
    return directory / "clouds" / rig / f"{frame:06d}.xyz"


def write_scenario(
    directory: str | Path,
    scenario: Scenario,
    camera_noise: CameraNoiseModel | None = None,
    embeddings: EmbeddingModel | None = None,
    write_clouds: bool = True,
    progress_callback: Callable[[dict], None] | None = None,
) -> dict[str, Any]:
    """Render and write every artefact of *scenario*; returns per-artefact counts."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rigs = scenario.cfg.rigs
    seed = scenario.seed

    def _progress(message: str) -> None:
        if progress_callback:
            progress_callback({"type": "progress", "stage": "simulate", "message": message})

    gt = scenario.ground_truth()
    write_ground_truth(directory / "gt.txt", gt)
    counts: dict[str, Any] = {"frames": scenario.frame_count, "players": len(scenario.ids), "points": 0}

    if write_clouds:
        for frame in scenario.frames:
            for rig in rigs:
                cloud = sample_lidar(scenario, rig, frame)
                write_cloud(cloud_path(directory, rig.name, frame), cloud)
                counts["points"] += len(cloud)
            if frame % 50 == 0:
                _progress(f"clouds written up to frame {frame}/{scenario.frame_count}")

    vectors = []
    for index, rig in enumerate(rigs):
        camera = rig.camera_model()
        detector = CameraOracleDetector(camera_noise, seed, rig.camera.image_size, index)
        truth, dets = [], []
        for frame in scenario.frames:
            boxes = render_camera_gt(scenario, camera, frame)
            truth.extend(boxes)
            dets.append(detector.detect(DetectorFrame(frame, scenario.timestamp(frame), camera_boxes=boxes)))
            if embeddings is not None:
                for b in boxes:
                    vec = synth_embedding(b.gt_id, b.visibility, seed, embeddings, 0, (frame << 8) | index)
                    vectors.append((b.gt_id, frame, index, vec))
        write_camera_gt(directory / "camera_gt" / f"{rig.name}.txt", truth)
        write_detections(directory / "camera_dets" / f"{rig.name}.txt", dets)
        counts[f"camera_gt.{rig.name}"] = len(truth)
        counts[f"camera_dets.{rig.name}"] = sum(len(d) for d in dets)
        _progress(f"camera {rig.name}: {len(truth)} ground-truth boxes")

    if embeddings is not None:
        write_embeddings(directory / "embeddings.txt", vectors)
        counts["embeddings"] = len(vectors)
    logger.info("scenario written to %s (%d frames)", directory, scenario.frame_count)
    return counts
