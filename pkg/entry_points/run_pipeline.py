#!/usr/bin/env python3
"""Run the multi-LiDAR court tracking pipeline.

Subcommands:
  simulate      Generate a synthetic sequence directory (clouds, GT, camera files)
  track         LiDAR-only tracking: merge, filter, rasterize, detect, track
  track-fusion  LiDAR-only tracking plus camera-assisted identity repair
  evaluate      Score track files against ground truth
  report        Write comparison.txt / comparison.csv from evaluate output
  suite         Compare LiDAR-only and fused tracking over scripted crossings

Every configuration key can be given in a ``--config`` file
(``section.key = value``) or as a ``--section.key`` flag.

Usage:
    python entry_points/run_pipeline.py simulate --output-dir data/seq01 --simulator.crossings 3
    python entry_points/run_pipeline.py track --input data/seq01
    python entry_points/run_pipeline.py track-fusion --input data/seq01 --reid.anchors orthogonal
    python entry_points/run_pipeline.py evaluate --input data/seq01
    python entry_points/run_pipeline.py report --output-dir data/seq01/results
    python entry_points/run_pipeline.py suite --suite.scenarios 20 --output-dir output/suite
"""

import argparse
import dataclasses
import json
import sys
from collections import Counter
from datetime import datetime, timezone
from pathlib import Path

from dotenv import load_dotenv

# Ensure project root is on sys.path so we can import court_fusion/
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from court_fusion.config import (  # noqa: E402
    SCENARIO_FILE,
    PipelineConfig,
    add_config_arguments,
    collect_overrides,
    load_config,
)
from court_fusion.errors import ConfigurationError, CourtFusionError  # noqa: E402
from court_fusion.log import configure_logging  # noqa: E402
from court_fusion.pipeline.runner import (  # noqa: E402
    run_evaluate,
    run_fusion,
    run_lidar_only,
    run_simulate,
    session_lines,
)
from court_fusion.pipeline.suite import run_suite  # noqa: E402
from entry_points.generate_report import generate_report  # noqa: E402

COMMANDS = {
    "simulate": "generate a synthetic sequence directory",
    "track": "LiDAR-only tracking",
    "track-fusion": "LiDAR-only tracking plus camera-assisted identity repair",
    "evaluate": "score track files against ground truth",
    "report": "comparison table and CSV from evaluate output",
    "suite": "scripted-crossing comparison of LiDAR-only and fused tracking",
}


def save_json(obj: object, path: Path) -> None:
    """Write an object as formatted JSON to a file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False, default=str), encoding="utf-8")


def print_progress(event: dict) -> None:
    print(f"  [{event['stage']}] {event['message']}")


def parse_track_files(values: list[str]) -> dict[str, str]:
    """``METHOD=PATH`` pairs from repeated ``--tracks`` flags."""
    files = {}
    for value in values:
        method, sep, path = value.partition("=")
        if not sep or not method or not path:
            raise ConfigurationError(f"--tracks expects METHOD=PATH, got '{value}'")
        files[method] = path
    return files


# ── Subcommands ──────────────────────────────────────────────────────────────

def cmd_simulate(cfg: PipelineConfig, args) -> dict:
    print("Step 1: Generating scenario and writing sensor files...")
    result = run_simulate(cfg, print_progress)
    counts = result["counts"]
    print(f"  Frames: {counts['frames']} | Players: {counts['players']} | Points: {counts['points']:,}")
    for c in result["crossings"]:
        print(f"  Crossing: players {c['players'][0]} & {c['players'][1]} at {c['time_s']}s")
    return {"counts": counts, "crossings": result["crossings"], "outputs": result["outputs"]}


def cmd_track(cfg: PipelineConfig, args) -> dict:
    print("Step 1: LiDAR-only tracking (merge, filter, rasterize, detect, track)...")
    result = run_lidar_only(cfg, print_progress)
    return {
        "frames": len(result["frames"]),
        "track_ids": result["track_ids"],
        "timing": result["timing"].as_dict(),
        "outputs": result["outputs"],
    }


def cmd_track_fusion(cfg: PipelineConfig, args) -> dict:
    print("Step 1: LiDAR-only tracking (merge, filter, rasterize, detect, track)...")
    print("Step 2: Occlusion sessions, camera search and re-identification...")
    result = run_fusion(cfg, print_progress)
    statuses = Counter(r["status"] for r in result["results"].values())
    for line in session_lines(result["sessions"], result["results"]):
        print(f"  {line}")
    return {
        "frames": len(result["frames"]),
        "track_ids": len(result["tracks"].ids),
        "sessions": len(result["sessions"]),
        "session_status": dict(statuses),
        "session_results": {str(k): v for k, v in result["results"].items()},
        "sessions_skipped": result["skipped"],
        "session_errors": {str(k): v for k, v in result["errors"].items()},
        "timing": result["timing"].as_dict(),
        "outputs": result["outputs"],
    }


def cmd_evaluate(cfg: PipelineConfig, args) -> dict:
    print("Step 1: Matching tracks to ground truth and computing metrics...")
    result = run_evaluate(cfg, parse_track_files(args.tracks), print_progress)
    for report in result["reports"]:
        print(report.render_text())
    return {
        "reports": [dataclasses.asdict(r) for r in result["reports"]],
        "outputs": result["outputs"],
    }


def cmd_report(cfg: PipelineConfig, args) -> dict:
    print("Step 1: Building comparison report...")
    paths = generate_report(Path(cfg.paths.output_dir), Path(args.report_dir) if args.report_dir else None)
    return {"outputs": [str(p) for p in paths.values()]}


def cmd_suite(cfg: PipelineConfig, args) -> dict:
    print(f"Step 1: Running {cfg.suite.scenarios} scripted-crossing scenario(s) "
          f"on {cfg.suite.workers} worker(s)...")
    result = run_suite(cfg, print_progress)
    cases = [{k: v for k, v in c.items() if k != "timing"} for c in result["cases"]]
    return {
        "summary": result["summary"],
        "cases": cases,
        "case_timing": {str(c["index"]): c["timing"] for c in result["cases"]},
        "outputs": result["outputs"],
    }


HANDLERS = {
    "simulate": cmd_simulate,
    "track": cmd_track,
    "track-fusion": cmd_track_fusion,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "suite": cmd_suite,
}


# ── Summary ──────────────────────────────────────────────────────────────────

def print_summary(manifest: dict) -> None:
    """Print a human-readable summary of the pipeline run."""
    print("\n" + "=" * 60)
    print(f"PIPELINE RUN SUMMARY ({manifest['command']})")
    print("=" * 60)

    if "frames" in manifest:
        print(f"Frames: {manifest['frames']}")
    if "track_ids" in manifest:
        print(f"Track ids: {manifest['track_ids']}")
    if "sessions" in manifest:
        print(f"Occlusion sessions: {manifest['sessions']}")
        for status, count in sorted(manifest["session_status"].items()):
            print(f"  {status}: {count}")
        for k, reason in manifest["session_errors"].items():
            print(f"  - session {k}: {reason}")
    if "timing" in manifest:
        t = manifest["timing"]
        print("\nTiming (ms/frame):")
        print(f"  Detection + tracking: {t['detection_tracking_ms_per_frame']:.2f}")
        print(f"  Fusion re-id:         {t['fusion_reid_ms_per_frame']:.2f}")
        print(f"  Total:                {t['total_ms_per_frame']:.2f} ({t['frames_per_second']:.1f} frames/s)")
    if "summary" in manifest:
        s = manifest["summary"]
        print(f"Scenarios: {s['scenarios']}")
        print(f"  R_ID fusion >= LiDAR-only: {s['rid_not_worse']}/{s['scenarios']}")
        print(f"  Mean IDF1: {s['mean_idf1_lidar']:.3f} -> {s['mean_idf1_fusion']:.3f} "
              f"(delta {s['mean_idf1_delta']:+.3f})")
        print(f"  DetA unchanged: {s['deta_equal']}")

    print(f"\nResults saved to: {manifest.get('output_dir', 'output/')}")
    for path in manifest.get("outputs", []):
        print(f"  - {path}")


# ── CLI ──────────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Run the multi-LiDAR court tracking pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", type=str, default=None,
                       help="Config file of section.key = value lines")
        p.add_argument("--input", type=str, default=None,
                       help=f"Sequence directory (sets paths.input_dir; its {SCENARIO_FILE} is loaded "
                            "when --config is not given)")
        p.add_argument("--output-dir", type=str, default=None,
                       help="Directory to save results (overrides paths.output_dir)")
        p.add_argument("--log-level", type=str, default=None,
                       help="Logging level (default: COURT_FUSION_LOG_LEVEL or WARNING)")
        p.add_argument("--env-file", type=str, default=".env",
                       help="Path to .env file (default: .env)")
        if name == "evaluate":
            p.add_argument("--tracks", action="append", default=[], metavar="METHOD=PATH",
                           help="Track file to score (repeatable; default: tracks_*.txt in the output dir)")
        if name == "report":
            p.add_argument("--report-dir", type=str, default=None,
                           help="Directory for comparison.txt/.csv (default: the output dir)")
        add_config_arguments(p)
    return parser


def resolve_config(args, extra: list[str]) -> PipelineConfig:
    overrides = collect_overrides(args, extra)
    config_path = args.config
    if args.input:
        overrides.setdefault("paths.input_dir", args.input)
        scenario_file = Path(args.input) / SCENARIO_FILE
        if config_path is None and scenario_file.is_file():
            config_path = scenario_file
    if args.output_dir:
        overrides["paths.output_dir"] = args.output_dir
    return load_config(config_path, overrides)


def main(argv: list[str] | None = None) -> int:
    """CLI entry point."""
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)

    # Load environment
    load_dotenv(args.env_file)
    configure_logging(args.log_level)

    try:
        cfg = resolve_config(args, extra)
        output_dir = Path(cfg.paths.output_dir)
        print(f"Command: {args.command}")
        print(f"Input dir: {cfg.paths.input_dir}")
        print(f"Output dir: {output_dir}")
        print()
        started = datetime.now(timezone.utc).isoformat()
        manifest = {
            "command": args.command,
            **HANDLERS[args.command](cfg, args),
            "config": cfg.to_dict(),
        }
    except CourtFusionError as e:
        print(f"Error: {e}")
        return e.exit_code

    manifest["output_dir"] = str(output_dir)
    # manifest.json holds no wall-clock values; they go to run_info.json
    run_info = {"run_timestamp": started, "command": args.command}
    for key in ("timing", "case_timing"):
        if key in manifest:
            run_info[key] = manifest.pop(key)
    save_json(manifest, output_dir / "manifest.json")
    save_json(run_info, output_dir / "run_info.json")
    print_summary({**manifest, **run_info})
    return 0


if __name__ == "__main__":
    sys.exit(main())
