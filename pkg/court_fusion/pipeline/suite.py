"""
Scripted-crossing suite: LiDAR-only against fused tracking on many scenarios.

Every case is simulated in memory (no clouds; the oracle detector merges
players closer than ``suite.merge_distance``), tracked, fused with synthetic
embeddings and scored against its ground truth. Cases run in worker
processes.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import logging
from dataclasses import replace
from typing import Any

import numpy as np

from ..config import PipelineConfig
from ..detection.oracle import OracleDetector
from ..fusion.providers import SyntheticEmbeddingProvider
from ..metrics.report import MetricsReport, comparison_table, evaluate_sequence
from ..simulator.camera_gt import render_camera_gt
from ..simulator.scenario import ScenarioConfig, generate_scenario, random_crossings, with_crossings
from .runner import (
    METHOD_FUSION,
    METHOD_LIDAR,
    CameraDetections,
    FrameInput,
    ProgressCallback,
    fuse_tracks,
    output_dir,
    report_progress,
    track_frames,
)
from .timing import STAGE_FUSION_REID, TimingReport

logger = logging.getLogger(__name__)


def _fit_duration(cfg: ScenarioConfig, count: int, pass_through_s: float, lead_s: float) -> ScenarioConfig:
    """Stretch the scenario so *count* spaced crossings fit."""
    if count == 0:
        return cfg
    needed = lead_s + 0.5 + (count - 1) * (lead_s + pass_through_s + 1.0) + pass_through_s + 1.0
    return replace(cfg, duration_s=max(cfg.duration_s, needed))


def case_plan(cfg: PipelineConfig, index: int) -> tuple[int, int]:
    """``(seed, crossing_count)`` of suite case *index*."""
    suite = cfg.suite
    rng = np.random.default_rng([suite.seed, index])
    count = int(rng.integers(suite.min_crossings, suite.max_crossings + 1))
    return suite.seed * 100_003 + index, count


def run_case(cfg: PipelineConfig, index: int) -> dict[str, Any]:
    sim = cfg.simulator
    seed, count = case_plan(cfg, index)
    scenario_cfg = _fit_duration(cfg.scenario_config(), count, sim.pass_through_s, sim.lead_s)
    scenario_cfg = with_crossings(
        scenario_cfg, random_crossings(scenario_cfg, count, seed, sim.pass_through_s, sim.lead_s)
    )
    scenario = generate_scenario(scenario_cfg, seed)
    gt = scenario.ground_truth()
    grid = cfg.grid()
    period = 1.0 / scenario_cfg.frame_rate

    detector = OracleDetector(replace(cfg.detector.noise(), merge_distance=cfg.suite.merge_distance), seed, grid)
    timing = TimingReport()
    with timing.total():
        inputs = (FrameInput(f, scenario.timestamp(f), (), gt[f]) for f in scenario.frames)
        table, _ = track_frames(inputs, detector, cfg.tracker, grid, cfg.region(), timing=timing)

        cameras = [rig.camera_model() for rig in scenario_cfg.rigs]
        camera_gt = {
            i: {f: render_camera_gt(scenario, cam, f) for f in scenario.frames}
            for i, cam in enumerate(cameras)
        }
        detections = CameraDetections(
            {}, camera_gt, cameras, cfg.camera_detector.noise(sim.body_height), seed, period
        )
        model = replace(cfg.reid.embedding_model(), anchors=cfg.suite.anchors)
        provider = SyntheticEmbeddingProvider(camera_gt, model, seed)
        with timing.stage(STAGE_FUSION_REID):
            fused = fuse_tracks(
                table, list(scenario.frames), cameras, detections, provider,
                cfg.search, cfg.reid.runner(), grid,
            )

    matching = cfg.metrics.matching()
    lidar = evaluate_sequence(gt, table, matching, METHOD_LIDAR)
    fusion = evaluate_sequence(gt, fused["tracks"], matching, METHOD_FUSION)
    statuses = [r["status"] for r in fused["results"].values()]
    return {
        "index": index,
        "seed": seed,
        "crossings": count,
        "sessions": len(fused["sessions"]),
        "repaired": statuses.count("repaired"),
        "lidar": dataclasses.asdict(lidar),
        "fusion": dataclasses.asdict(fusion),
        "timing": timing.as_dict(),
    }


def summarize(cases: list[dict[str, Any]]) -> dict[str, Any]:
    """Direction counts and mean deltas between the two methods."""
    lidar_idf1 = [c["lidar"]["idf1"] for c in cases]
    fusion_idf1 = [c["fusion"]["idf1"] for c in cases]
    return {
        "scenarios": len(cases),
        "rid_not_worse": sum(c["fusion"]["r_id"] >= c["lidar"]["r_id"] for c in cases),
        "mean_idf1_lidar": float(np.mean(lidar_idf1)) if cases else 0.0,
        "mean_idf1_fusion": float(np.mean(fusion_idf1)) if cases else 0.0,
        "mean_idf1_delta": float(np.mean(fusion_idf1) - np.mean(lidar_idf1)) if cases else 0.0,
        "deta_equal": all(c["fusion"]["deta"] == c["lidar"]["deta"] for c in cases),
        "sessions": sum(c["sessions"] for c in cases),
        "repaired": sum(c["repaired"] for c in cases),
    }


def suite_lines(cases: list[dict[str, Any]], summary: dict[str, Any]) -> list[str]:
    lines = ["# index seed crossings sessions repaired lidar_idf1 fusion_idf1 lidar_rid fusion_rid lidar_deta fusion_deta"]
    for c in cases:
        lines.append(
            f"{c['index']} {c['seed']} {c['crossings']} {c['sessions']} {c['repaired']} "
            f"{c['lidar']['idf1']:.4f} {c['fusion']['idf1']:.4f} "
            f"{c['lidar']['r_id']:.4f} {c['fusion']['r_id']:.4f} "
            f"{c['lidar']['deta']:.6f} {c['fusion']['deta']:.6f}"
        )
    lines.append("")
    lines.extend(f"{key} = {value}" for key, value in summary.items())
    return lines


def run_suite(cfg: PipelineConfig, progress_callback: ProgressCallback = None) -> dict[str, Any]:
    """Run all ``suite.scenarios`` cases; writes ``suite.txt`` and a per-method comparison."""
    indices = range(cfg.suite.scenarios)
    cases: list[dict[str, Any]] = []
    if cfg.suite.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.suite.workers) as executor:
            futures = {executor.submit(run_case, cfg, i): i for i in indices}
            for fut in concurrent.futures.as_completed(futures):
                try:
                    cases.append(fut.result())
                except Exception as e:
                    logger.error("suite case %d failed: %s", futures[fut], e)
                    raise
                report_progress(progress_callback, "suite", f"case {futures[fut]} done ({len(cases)}/{len(indices)})")
    else:
        for i in indices:
            cases.append(run_case(cfg, i))
            report_progress(progress_callback, "suite", f"case {i} done ({len(cases)}/{len(indices)})")
    cases.sort(key=lambda c: c["index"])

    summary = summarize(cases)
    out = output_dir(cfg)
    (out / "suite.txt").write_text("\n".join(suite_lines(cases, summary)) + "\n", encoding="utf-8")
    means = _mean_reports(cases)
    (out / "suite_comparison.txt").write_text(comparison_table(means) + "\n", encoding="utf-8")
    return {
        "cases": cases,
        "summary": summary,
        "outputs": [str(out / "suite.txt"), str(out / "suite_comparison.txt")],
    }


def _mean_reports(cases: list[dict[str, Any]]) -> list[MetricsReport]:
    """Per-method means over the suite; IDSW is the suite total."""
    reports = []
    for method in (METHOD_LIDAR, METHOD_FUSION):
        rows = [c[method] for c in cases]
        reports.append(MetricsReport(
            method=f"{method} (mean)",
            mota=float(np.mean([r["mota"] for r in rows])),
            idf1=float(np.mean([r["idf1"] for r in rows])),
            hota=float(np.mean([r["hota"] for r in rows])),
            deta=float(np.mean([r["deta"] for r in rows])),
            assa=float(np.mean([r["assa"] for r in rows])),
            r_id=float(np.mean([r["r_id"] for r in rows])),
            rid_no_events=all(r["rid_no_events"] for r in rows),
            idsw=int(sum(r["idsw"] for r in rows)),
        ))
    return reports
