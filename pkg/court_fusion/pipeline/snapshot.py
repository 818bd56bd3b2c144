"""Static BEV snapshot images (point density, tracks and ground truth)."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.patches as mpatches  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..geometry.bev import BevGrid  # noqa: E402
from ..ingestion.records import GroundTruthBox  # noqa: E402
from ..tracking.tracker import TrackRecord  # noqa: E402

logger = logging.getLogger(__name__)


def save_bev_snapshot(
    path: str | Path,
    grid: BevGrid,
    tracks: Sequence[TrackRecord],
    bev: np.ndarray | None = None,
    ground_truth: Sequence[GroundTruthBox] = (),
    title: str = "",
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x0, y0 = grid.origin
    extent = (x0, x0 + grid.width * grid.resolution, y0, y0 + grid.height * grid.resolution)

    fig, ax = plt.subplots(figsize=(10, 6))
    if bev is not None:
        ax.imshow(np.log1p(bev), origin="lower", extent=extent, cmap="Greys", interpolation="nearest")
    for gt in ground_truth:
        x, y, _, _ = gt.bounds
        ax.add_patch(mpatches.Rectangle((x, y), gt.w, gt.h, fill=False, ec="green", lw=1.0, ls="--"))
    cmap = plt.get_cmap("tab20")
    for r in tracks:
        color = cmap(r.id % 20)
        ax.add_patch(mpatches.Rectangle((r.cx - r.w / 2, r.cy - r.h / 2), r.w, r.h, fill=False, ec=color, lw=1.5))
        ax.annotate(str(r.id), (r.cx, r.cy + r.h / 2), fontsize=8, ha="center", va="bottom", color=color)

    ax.set_xlim(extent[0], extent[1])
    ax.set_ylim(extent[2], extent[3])
    ax.set_xlabel("X (m)")
    ax.set_ylabel("Y (m)")
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.legend(handles=[
        mpatches.Patch(fill=False, ec="green", ls="--", label="ground truth"),
        mpatches.Patch(fill=False, ec="black", label="tracks"),
    ], loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("snapshot written to %s", path)
    return path
