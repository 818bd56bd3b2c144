"""
Occlusion sessions from the per-frame track-id count series.

A two-state machine walks the series: IDLE switches to OCCLUDE when the
count drops (``N_t < N_{t-1}``) and remembers ``N_ref = N_{t-1}``; OCCLUDE
returns to IDLE at the first frame with ``N_t >= N_ref``. A drop that never
recovers before the last frame yields a session flagged ``open``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import EmptyInputError
from ..tracking.tracker import TrackTable

logger = logging.getLogger(__name__)

# Neighbour radius around a lost/gained id (about two body radii plus margin).
NEIGHBOR_RADIUS = 1.5


@dataclass(frozen=True)
class IdCountSeries:
    """Per-frame sets of live track ids.

    ``frames`` holds the frame number of each entry (defaults to 1..T);
    ``positions`` optionally maps each entry to ``{id: (x, y)}`` and is
    needed only for neighbour sets.
    """

    id_sets: tuple[frozenset[int], ...]
    frames: tuple[int, ...] = ()
    positions: tuple[Mapping[int, tuple[float, float]], ...] = ()

    def __post_init__(self):
        sets = tuple(frozenset(s) for s in self.id_sets)
        if not sets:
            raise EmptyInputError("an id-count series needs at least one frame")
        frames = tuple(self.frames) or tuple(range(1, len(sets) + 1))
        if len(frames) != len(sets):
            raise EmptyInputError(f"{len(frames)} frame numbers for {len(sets)} id sets")
        if self.positions and len(self.positions) != len(sets):
            raise EmptyInputError(f"{len(self.positions)} position maps for {len(sets)} id sets")
        object.__setattr__(self, "id_sets", sets)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "positions", tuple(self.positions))

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "IdCountSeries":
        """Series with synthetic ids ``0..N_t-1``; only the counts carry meaning."""
        return cls(tuple(frozenset(range(int(n))) for n in counts))

    @classmethod
    def from_table(cls, table: TrackTable, frames: Sequence[int] | None = None) -> "IdCountSeries":
        frames = list(frames) if frames is not None else table.frames
        return cls(
            tuple(frozenset(table.ids_at(f)) for f in frames),
            tuple(frames),
            tuple(table.positions_at(f) for f in frames),
        )

    @property
    def counts(self) -> np.ndarray:
        return np.array([len(s) for s in self.id_sets], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.id_sets)


@dataclass(frozen=True)
class OcclusionSession:
    """One occlusion interval.

    ``t_s`` and ``t_e`` are frame numbers. For an open session ``t_e`` is the
    last frame of the series and ``gain_ids`` is empty.
    """

    k: int
    t_s: int
    t_e: int
    n_ref: int
    lost_ids: frozenset[int]
    gain_ids: frozenset[int]
    neighbor_lost_ids: frozenset[int] = field(default_factory=frozenset)
    neighbor_gain_ids: frozenset[int] = field(default_factory=frozenset)
    open: bool = False

    @property
    def pre_ids(self) -> frozenset[int]:
        return self.lost_ids | self.neighbor_lost_ids

    @property
    def post_ids(self) -> frozenset[int]:
        return self.gain_ids | self.neighbor_gain_ids


def diff_series(series: IdCountSeries | Sequence[int]) -> list[int]:
    """First differences ``N_t - N_{t-1}`` (length T-1)."""
    counts = series.counts if isinstance(series, IdCountSeries) else np.asarray(series, dtype=np.int64)
    if len(counts) < 2:
        raise EmptyInputError("diff_series needs at least two frames")
    return [int(v) for v in np.diff(counts)]


def _neighbors(
    anchors: set[int],
    candidates: set[int],
    positions: Mapping[int, tuple[float, float]],
    radius: float,
) -> frozenset[int]:
    out = set()
    for c in candidates:
        if c not in positions:
            continue
        cx, cy = positions[c]
        for a in anchors:
            if a in positions and math.hypot(cx - positions[a][0], cy - positions[a][1]) <= radius:
                out.add(c)
                break
    return frozenset(out)


def extract_sessions(series: IdCountSeries, neighbor_radius: float = NEIGHBOR_RADIUS) -> list[OcclusionSession]:
    """Run the IDLE/OCCLUDE state machine over *series*.

    Sessions are disjoint and in time order. Neighbour sets are filled only
    when the series carries positions: survivors at ``t_s`` that stood within
    *neighbor_radius* of a lost id at ``t_s - 1``, and survivors at ``t_e``
    within *neighbor_radius* of a gained id at ``t_e``.
    """
    counts = series.counts
    sets = series.id_sets
    positions = series.positions
    sessions: list[OcclusionSession] = []

    occluding = False
    start = n_ref = 0
    for i in range(1, len(counts)):
        if not occluding and counts[i] < counts[i - 1]:
            occluding, start, n_ref = True, i, int(counts[i - 1])
        elif occluding and counts[i] >= n_ref:
            sessions.append(_build_session(len(sessions) + 1, start, i, n_ref, series, neighbor_radius))
            occluding = False

    if occluding:
        last = len(counts) - 1
        lost = set(sets[start - 1] - sets[start])
        near_lost = frozenset()
        if positions:
            near_lost = _neighbors(lost, set(sets[start - 1] & sets[start]), positions[start - 1], neighbor_radius)
        sessions.append(OcclusionSession(
            k=len(sessions) + 1,
            t_s=series.frames[start],
            t_e=series.frames[last],
            n_ref=n_ref,
            lost_ids=frozenset(lost),
            gain_ids=frozenset(),
            neighbor_lost_ids=near_lost,
            open=True,
        ))
        logger.info("occlusion session %d still open at frame %d", len(sessions), series.frames[last])
    return sessions


def _build_session(
    k: int,
    start: int,
    end: int,
    n_ref: int,
    series: IdCountSeries,
    radius: float,
) -> OcclusionSession:
    sets, positions = series.id_sets, series.positions
    lost = set(sets[start - 1] - sets[start])
    gain = set(sets[end] - sets[end - 1])
    near_lost = near_gain = frozenset()
    if positions:
        near_lost = _neighbors(lost, set(sets[start - 1] & sets[start]), positions[start - 1], radius)
        near_gain = _neighbors(gain, set(sets[end] & sets[end - 1]), positions[end], radius)
    return OcclusionSession(
        k=k,
        t_s=series.frames[start],
        t_e=series.frames[end],
        n_ref=n_ref,
        lost_ids=frozenset(lost),
        gain_ids=frozenset(gain),
        neighbor_lost_ids=near_lost,
        neighbor_gain_ids=near_gain,
    )


def format_session(session: OcclusionSession) -> str:
    """Report line ``k t_s t_e N_ref lost=[...] gain=[...]`` plus ``open`` when unterminated."""
    line = (
        f"{session.k} {session.t_s} {session.t_e} {session.n_ref} "
        f"lost=[{','.join(str(i) for i in sorted(session.lost_ids))}] "
        f"gain=[{','.join(str(i) for i in sorted(session.gain_ids))}]"
    )
    return line + " open" if session.open else line
