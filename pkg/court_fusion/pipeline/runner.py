"""
Pipeline stages behind the command-line subcommands.

    simulate      scenario → clouds, ground truth, camera files, scenario.cfg
    track         clouds → merge → filter → rasterize → detect → track
    track-fusion  track, then occlusion sessions → camera search → re-id → remap
    evaluate      ground truth + track files → metrics reports

Each ``run_*`` function takes a ``PipelineConfig``, writes its outputs under
``paths.output_dir`` and returns a summary dict for the run manifest.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from ..config import SCENARIO_FILE, PipelineConfig, with_rigs
from ..detection.base import DetectionSet, DetectorBase, DetectorFrame
from ..detection.factory import create_detector
from ..detection.oracle import CameraNoiseModel, CameraOracleDetector
from ..errors import ConfigurationError, DataError
from ..fusion.matching import FusionContext, SearchConfig
from ..fusion.occlusion import IdCountSeries, OcclusionSession, extract_sessions, format_session
from ..fusion.providers import KEY_GT, CameraTruth, EmbeddingProvider, FileEmbeddingProvider, SyntheticEmbeddingProvider
from ..fusion.runner import STATUS_OPEN, ReidConfig, run_sessions
from ..geometry.bev import BevGrid, rasterize_bev
from ..geometry.camera import CameraModel
from ..geometry.region import CourtRegion, filter_region
from ..geometry.transforms import PointCloud, RigidTransform, merge_clouds
from ..ingestion.formats import read_ground_truth, read_tracks, write_tracks
from ..ingestion.records import GroundTruthBox, GroundTruthSequence
from ..ingestion.sources import CloudSequence, load_camera_detections, load_camera_truth
from ..metrics.report import MetricsReport, comparison_table, evaluate_sequence
from ..simulator.export import write_scenario
from ..simulator.scenario import generate_scenario, random_crossings, with_crossings
from ..tracking.tracker import BevTracker, TrackerConfig, TrackTable
from .snapshot import save_bev_snapshot
from .timing import STAGE_DETECTION_TRACKING, STAGE_FUSION_REID, TimingReport

logger = logging.getLogger(__name__)

LIDAR_TRACKS = "tracks_lidar.txt"
FUSION_TRACKS = "tracks_fusion.txt"
SESSIONS_FILE = "sessions.txt"
PATCHES_FILE = "patch_requests.txt"
COMPARISON_FILE = "comparison.txt"
METHOD_LIDAR = "lidar"
METHOD_FUSION = "fusion"

ProgressCallback = Callable[[dict], None] | None


def report_progress(callback: ProgressCallback, stage: str, message: str) -> None:
    if callback:
        callback({"type": "progress", "stage": stage, "message": message})


def output_dir(cfg: PipelineConfig) -> Path:
    path = Path(cfg.paths.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ── Detection and tracking ───────────────────────────────────────────────────

@dataclass
class FrameInput:
    """What the detector sees for one frame: rig scans and/or oracle players."""

    frame: int
    timestamp: float
    clouds: Sequence[tuple[int, PointCloud]] = ()
    players: Sequence[GroundTruthBox] = ()


def track_frames(
    inputs: Iterable[FrameInput],
    detector: DetectorBase,
    tracker_cfg: TrackerConfig,
    grid: BevGrid,
    region: CourtRegion,
    poses: Sequence[RigidTransform] = (),
    frame_period: float = 0.1,
    timing: TimingReport | None = None,
    keep_bev: Iterable[int] = (),
) -> tuple[TrackTable, dict[int, np.ndarray]]:
    """Run the per-frame LiDAR-only loop; returns tracks and the BEV images of *keep_bev* frames."""
    timing = timing or TimingReport()
    keep_bev = set(keep_bev)
    tracker = BevTracker(tracker_cfg, grid)
    table = TrackTable()
    images: dict[int, np.ndarray] = {}
    for item in inputs:
        with timing.stage(STAGE_DETECTION_TRACKING):
            bev = None
            if item.clouds:
                merged = merge_clouds(
                    [cloud for _, cloud in item.clouds], [poses[i] for i, _ in item.clouds], frame_period
                )
                bev = rasterize_bev(filter_region(merged, region), grid)
            dets = detector.detect(DetectorFrame(item.frame, item.timestamp, bev, item.players))
            table.add_frame(item.frame, tracker.step(dets))
        timing.frames += 1
        if bev is not None and item.frame in keep_bev:
            images[item.frame] = bev
    return table, images


def run_lidar_only(cfg: PipelineConfig, progress_callback: ProgressCallback = None) -> dict[str, Any]:
    """LiDAR-only tracking of the sequence under ``paths.input_dir``."""
    rig_names = cfg.require_rigs()
    poses = cfg.lidar_poses()
    grid = cfg.grid()
    period = cfg.frame_period()
    sequence = CloudSequence(cfg.paths.resolve("clouds"), rig_names)

    gt = _optional_ground_truth(cfg)
    if cfg.detector.kind == "oracle" and gt is None:
        raise DataError(f"detector.kind = oracle needs ground truth at {cfg.paths.resolve('ground_truth')}")
    detector = create_detector(
        cfg.detector.kind, grid, cfg.detector.noise(), cfg.detector.seed,
        cfg.paths.resolve("detections"), cfg.detector.min_points,
    )
    report_progress(progress_callback, "track", f"{len(sequence)} frame(s) from {len(rig_names)} rig(s)")

    timing = TimingReport()
    with timing.total():
        inputs = (
            FrameInput(frame, min(c.timestamp for _, c in clouds), clouds, gt[frame] if gt else ())
            for frame, clouds in sequence
        )
        table, images = track_frames(
            inputs, detector, cfg.tracker, grid, cfg.region(), poses, period, timing,
            cfg.output.snapshot_frames,
        )

    out = output_dir(cfg)
    write_tracks(out / LIDAR_TRACKS, table)
    timing.write(out / "timing_lidar.txt")
    snapshots = _snapshots(cfg, table, images, gt, METHOD_LIDAR)
    logger.info("LiDAR-only tracking: %d frame(s), %d id(s)", len(sequence), len(table.ids))
    return {
        "tracks": table,
        "frames": list(sequence.frames),
        "timing": timing,
        "images": images,
        "ground_truth": gt,
        "outputs": [str(out / LIDAR_TRACKS), str(out / "timing_lidar.txt"), *snapshots],
        "track_ids": len(table.ids),
    }


def _optional_ground_truth(cfg: PipelineConfig) -> GroundTruthSequence | None:
    path = cfg.paths.resolve("ground_truth")
    if path is None or not path.exists():
        return None
    return read_ground_truth(path)


def _snapshots(
    cfg: PipelineConfig,
    table: TrackTable,
    images: Mapping[int, np.ndarray],
    gt: GroundTruthSequence | None,
    method: str,
) -> list[str]:
    out = output_dir(cfg)
    written = []
    for frame in cfg.output.snapshot_frames:
        if frame not in table.frames:
            logger.warning("snapshot frame %d is outside the sequence", frame)
            continue
        path = save_bev_snapshot(
            out / "snapshots" / f"{method}_{frame:06d}.png", cfg.grid(), table[frame],
            images.get(frame), gt[frame] if gt else (), f"{method} frame {frame}",
        )
        written.append(str(path))
    return written


# ── Fusion ───────────────────────────────────────────────────────────────────

class CameraDetections:
    """``(camera_index, frame) -> DetectionSet`` in pixels.

    Stored detections win; otherwise boxes are simulated from camera ground
    truth. Cameras with neither yield empty sets.
    """

    def __init__(
        self,
        stored: Mapping[int, Mapping[int, DetectionSet]],
        camera_gt: CameraTruth,
        cameras: Sequence[CameraModel],
        noise: CameraNoiseModel | None = None,
        seed: int = 0,
        frame_period: float = 0.1,
    ):
        self.stored = stored
        self.camera_gt = camera_gt
        self.frame_period = frame_period
        self.simulated = {
            i: CameraOracleDetector(noise, seed, cam.image_size, i)
            for i, cam in enumerate(cameras)
            if i not in stored and i in camera_gt
        }
        self._cache: dict[tuple[int, int], DetectionSet] = {}

    def __call__(self, camera_index: int, frame: int) -> DetectionSet:
        key = (camera_index, frame)
        if key in self._cache:
            return self._cache[key]
        timestamp = (frame - 1) * self.frame_period
        if camera_index in self.stored:
            dets = self.stored[camera_index].get(frame) or DetectionSet(timestamp, (), frame)
        elif camera_index in self.simulated:
            boxes = self.camera_gt[camera_index].get(frame, ())
            dets = self.simulated[camera_index].detect(DetectorFrame(frame, timestamp, camera_boxes=boxes))
        else:
            dets = DetectionSet(timestamp, (), frame)
        self._cache[key] = dets
        return dets


def build_provider(cfg: PipelineConfig, camera_gt: CameraTruth) -> EmbeddingProvider | None:
    """Embedding provider named by ``reid.provider``; ``None`` leaves every session unrepaired."""
    kind = cfg.reid.provider
    if kind == "none":
        return None
    if kind == "synthetic":
        if not camera_gt:
            logger.warning("reid.provider = synthetic needs camera ground truth; fusion runs without embeddings")
            return None
        return SyntheticEmbeddingProvider(camera_gt, cfg.reid.embedding_model(), cfg.reid.seed)
    path = cfg.paths.resolve("embeddings")
    if path is None or not path.exists():
        logger.warning("embedding file %s not found; fusion runs without embeddings", path)
        return None
    return FileEmbeddingProvider(path, cfg.reid.key, camera_gt if cfg.reid.key == KEY_GT else None)


def fuse_tracks(
    table: TrackTable,
    frames: Sequence[int],
    cameras: Sequence[CameraModel],
    detections: Callable[[int, int], DetectionSet],
    provider: EmbeddingProvider | None,
    search: SearchConfig,
    reid: ReidConfig,
    grid: BevGrid,
    progress_callback: ProgressCallback = None,
) -> dict[str, Any]:
    """Extract occlusion sessions from *table* and repair identities across them."""
    sessions = extract_sessions(IdCountSeries.from_table(table, frames))
    report_progress(progress_callback, "fusion", f"{len(sessions)} occlusion session(s)")
    if not sessions:
        return {"tracks": table, "sessions": [], "results": {}, "skipped": [], "errors": {}, "patches": []}
    ctx = FusionContext.from_table(table, cameras, detections, grid, frames)
    outcome = run_sessions(table, sessions, ctx, provider, search, reid, progress_callback)
    outcome["sessions"] = sessions
    return outcome


def session_lines(sessions: Sequence[OcclusionSession], results: Mapping[int, dict]) -> list[str]:
    lines = []
    for s in sessions:
        outcome = results.get(s.k)
        if outcome is None:
            lines.append(f"{format_session(s)} status={STATUS_OPEN}")
            continue
        mapping = ",".join(f"{post}->{pre}" for post, pre in outcome["mapping"].items())
        lines.append(f"{format_session(s)} status={outcome['status']} remap=[{mapping}]")
    return lines


def run_fusion(cfg: PipelineConfig, progress_callback: ProgressCallback = None) -> dict[str, Any]:
    """LiDAR-only tracking followed by camera-assisted identity repair."""
    lidar = run_lidar_only(cfg, progress_callback)
    table, frames, timing = lidar["tracks"], lidar["frames"], lidar["timing"]
    rig_names = cfg.require_rigs()
    cameras = cfg.cameras()
    period = cfg.frame_period()

    camera_gt = load_camera_truth(cfg.paths.resolve("camera_gt"), rig_names)
    stored = load_camera_detections(cfg.paths.resolve("camera_detections"), rig_names, period)
    detections = CameraDetections(
        stored, camera_gt, cameras, cfg.camera_detector.noise(cfg.simulator.body_height),
        cfg.camera_detector.seed, period,
    )
    provider = build_provider(cfg, camera_gt)

    with timing.total(), timing.stage(STAGE_FUSION_REID):
        fused = fuse_tracks(
            table, frames, cameras, detections, provider, cfg.search, cfg.reid.runner(),
            cfg.grid(), progress_callback,
        )

    out = output_dir(cfg)
    write_tracks(out / FUSION_TRACKS, fused["tracks"])
    (out / SESSIONS_FILE).write_text(
        "\n".join(session_lines(fused["sessions"], fused["results"])) + "\n", encoding="utf-8"
    )
    outputs = [str(out / FUSION_TRACKS), str(out / SESSIONS_FILE)]
    if cfg.output.write_patches:
        (out / PATCHES_FILE).write_text("".join(line + "\n" for line in fused["patches"]), encoding="utf-8")
        outputs.append(str(out / PATCHES_FILE))
    timing.write(out / "timing_fusion.txt")
    outputs.append(str(out / "timing_fusion.txt"))
    outputs += _snapshots(cfg, fused["tracks"], lidar["images"], lidar["ground_truth"], METHOD_FUSION)

    return {
        **lidar,
        "tracks": fused["tracks"],
        "lidar_tracks": table,
        "sessions": fused["sessions"],
        "results": fused["results"],
        "skipped": fused["skipped"],
        "errors": fused["errors"],
        "outputs": lidar["outputs"] + outputs,
    }


# ── Evaluation ───────────────────────────────────────────────────────────────

def default_track_files(cfg: PipelineConfig) -> dict[str, Path]:
    out = Path(cfg.paths.output_dir)
    found = {
        method: out / name
        for method, name in ((METHOD_LIDAR, LIDAR_TRACKS), (METHOD_FUSION, FUSION_TRACKS))
        if (out / name).exists()
    }
    if not found:
        raise DataError(f"no track files in {out}; run track or track-fusion first, or pass --tracks")
    return found


def run_evaluate(
    cfg: PipelineConfig,
    track_files: Mapping[str, str | Path] | None = None,
    progress_callback: ProgressCallback = None,
) -> dict[str, Any]:
    """Score each track file against ``paths.ground_truth``."""
    gt_path = cfg.paths.resolve("ground_truth")
    if gt_path is None:
        raise ConfigurationError("evaluate needs paths.ground_truth")
    gt = read_ground_truth(gt_path)
    files = dict(track_files) if track_files else default_track_files(cfg)
    out = output_dir(cfg)

    reports: list[MetricsReport] = []
    for method, path in files.items():
        report = evaluate_sequence(
            gt, read_tracks(path), cfg.metrics.matching(), method, cfg.metrics.hota_sweep
        )
        report.write(out / f"metrics_{method}.txt")
        reports.append(report)
        report_progress(progress_callback, "evaluate", f"{method}: HOTA {report.hota:.3f} IDF1 {report.idf1:.3f}")

    (out / COMPARISON_FILE).write_text(comparison_table(reports) + "\n", encoding="utf-8")
    return {
        "reports": reports,
        "outputs": [str(out / f"metrics_{r.method}.txt") for r in reports] + [str(out / COMPARISON_FILE)],
    }


# ── Simulation ───────────────────────────────────────────────────────────────

def run_simulate(cfg: PipelineConfig, progress_callback: ProgressCallback = None) -> dict[str, Any]:
    """Generate a scenario and write it as a sequence directory under ``paths.output_dir``."""
    sim = cfg.simulator
    scenario_cfg = cfg.scenario_config()
    crossings = random_crossings(scenario_cfg, sim.crossings, sim.seed, sim.pass_through_s, sim.lead_s)
    scenario_cfg = with_crossings(scenario_cfg, crossings)
    scenario = generate_scenario(scenario_cfg, sim.seed)
    report_progress(progress_callback, "simulate", f"{scenario.frame_count} frame(s), {len(scenario.ids)} player(s)")

    out = output_dir(cfg)
    counts = write_scenario(
        out,
        scenario,
        cfg.camera_detector.noise(sim.body_height),
        cfg.reid.embedding_model() if sim.write_embeddings else None,
        sim.write_clouds,
        progress_callback,
    )

    resolved = with_rigs(cfg, scenario_cfg.rigs)
    resolved = replace(
        resolved,
        paths=replace(cfg.paths, input_dir=str(out), output_dir=str(out / "results")),
        camera_detector=replace(cfg.camera_detector, seed=sim.seed),
        reid=replace(cfg.reid, seed=sim.seed),
    )
    resolved.write(out / SCENARIO_FILE)
    return {
        "counts": counts,
        "crossings": [
            {"players": [c.player_a, c.player_b], "time_s": c.time_s} for c in crossings
        ],
        "outputs": [str(out / SCENARIO_FILE), str(out / "gt.txt")],
    }
