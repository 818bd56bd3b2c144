"""
Detector factory keyed by the ``detector.kind`` configuration value.
"""

from __future__ import annotations

from pathlib import Path

from ..errors import ConfigurationError
from ..geometry.bev import BevGrid
from .base import DetectorBase
from .cluster import ClusterDetector
from .oracle import OracleDetector, OracleNoiseModel
from .replay import ReplayDetector

DETECTOR_KINDS = ("oracle", "replay", "cluster")


def create_detector(
    kind: str,
    grid: BevGrid | None = None,
    noise: OracleNoiseModel | None = None,
    seed: int = 0,
    replay_path: str | Path | None = None,
    min_points: int = 10,
) -> DetectorBase:
    """Return the BEV detector for *kind* (``oracle`` | ``replay`` | ``cluster``)."""
    if kind == "oracle":
        return OracleDetector(noise, seed, grid)
    if kind == "replay":
        if replay_path is None:
            raise ConfigurationError("detector.kind = replay needs paths.detections")
        return ReplayDetector(replay_path, "bev", grid)
    if kind == "cluster":
        return ClusterDetector(grid, min_points=min_points)
    raise ConfigurationError(f"unknown detector kind '{kind}' (choose from {', '.join(DETECTOR_KINDS)})")
