"""
Appearance re-identification across occlusion sessions.

Pre-occlusion features (lost and neighbouring ids before ``t_s``) are paired
with post-occlusion features (gained and neighbouring ids after ``t_e``) by
repeatedly taking the globally most similar unpaired couple. Each couple of
two different ids becomes a rename ``post -> pre`` applied from ``t_e`` on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import ConfigurationError, ConsistencyError, DegenerateInputError
from ..tracking.tracker import TrackRecord, TrackTable
from .occlusion import OcclusionSession

logger = logging.getLogger(__name__)

SCOPE_ALL = "all"
SCOPE_LOST_GAIN = "lost_gain"


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """Appearance feature, stored with unit L2 norm."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise DegenerateInputError("embedding must be a finite, non-empty vector")
        norm = float(np.linalg.norm(v))
        if norm <= 0.0:
            raise DegenerateInputError("embedding has zero norm")
        v = v / norm
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return int(self.values.size)


def _as_array(v) -> np.ndarray:
    return v.values if isinstance(v, EmbeddingVector) else np.asarray(v, dtype=np.float64).reshape(-1)


def cosine(a, b) -> float:
    """Cosine similarity of two non-zero vectors (``EmbeddingVector`` or array-like)."""
    va, vb = _as_array(a), _as_array(b)
    if va.shape != vb.shape:
        raise DegenerateInputError(f"embedding dimensions differ: {va.size} vs {vb.size}")
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        raise DegenerateInputError("cosine similarity of a zero vector")
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


@dataclass
class IdRemap:
    """Renames for one session: ``mapping[post_id] = pre_id`` from frame ``t_e`` on."""

    k: int
    t_e: int
    mapping: dict[int, int] = field(default_factory=dict)
    pairs: list[tuple[int, int, float]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.mapping)


def resolve_session(
    session: OcclusionSession,
    pre_features: Mapping[int, EmbeddingVector],
    post_features: Mapping[int, EmbeddingVector],
    scope: str = SCOPE_ALL,
    min_cosine: float | None = None,
) -> IdRemap:
    """Greedy highest-cosine pairing of pre- and post-occlusion ids.

    ``pairs`` records every couple taken (including identity couples);
    ``mapping`` holds only the renames. With ``scope = lost_gain`` only a lost
    id paired with a gained id produces a rename.
    """
    if scope not in (SCOPE_ALL, SCOPE_LOST_GAIN):
        raise ConfigurationError(f"unknown reid scope '{scope}'")
    remap = IdRemap(session.k, session.t_e)
    pre_ids = sorted(i for i in session.pre_ids if i in pre_features)
    post_ids = sorted(i for i in session.post_ids if i in post_features)
    if not pre_ids or not post_ids:
        logger.info("session %d: no candidates on %s side, left unrepaired",
                    session.k, "pre" if not pre_ids else "post")
        return remap

    pre = np.stack([_as_array(pre_features[i]) for i in pre_ids])
    post = np.stack([_as_array(post_features[i]) for i in post_ids])
    sim = 1.0 - cdist(pre, post, metric="cosine")

    # Greedy global maximum; ties resolve to the lowest (pre, post) ids.
    available = np.ones_like(sim, dtype=bool)
    while available.any():
        masked = np.where(available, sim, -np.inf)
        i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
        score = float(sim[i, j])
        if min_cosine is not None and score < min_cosine:
            break
        pre_id, post_id = pre_ids[i], post_ids[j]
        remap.pairs.append((pre_id, post_id, score))
        available[i, :] = False
        available[:, j] = False
        if pre_id == post_id:
            continue
        if scope == SCOPE_LOST_GAIN and not (pre_id in session.lost_ids and post_id in session.gain_ids):
            continue
        remap.mapping[post_id] = pre_id
    return remap


def apply_remap(
    table: TrackTable,
    remaps: Sequence[IdRemap],
    rejected: list[dict] | None = None,
) -> TrackTable:
    """Rewrite track ids session by session.

    Remaps are expressed in the ids of *table*. They are applied in ``t_e``
    order; a later remap that points at an id already renamed follows that
    rename. All renames of one session are applied together. A session whose
    renames would put the same id twice into one frame is skipped and listed
    in *rejected*.
    """
    frames = table.frames
    orig = {f: [r for r in table[f]] for f in frames}
    current = {f: {r.id: r.id for r in orig[f]} for f in frames}
    alias: dict[int, int] = {}

    for remap in sorted(remaps, key=lambda r: (r.t_e, r.k)):
        if not remap.mapping:
            continue
        targets = {post: alias.get(pre, pre) for post, pre in remap.mapping.items()}
        staged: dict[int, dict[int, int]] = {}
        try:
            for f in frames:
                if f < remap.t_e:
                    continue
                names = dict(current[f])
                for post, target in targets.items():
                    if post in names:
                        names[post] = target
                if len(set(names.values())) != len(names):
                    raise ConsistencyError(
                        f"session {remap.k}: renaming would duplicate an id in frame {f}"
                    )
                staged[f] = names
        except ConsistencyError as exc:
            logger.warning("%s; session rejected", exc)
            if rejected is not None:
                rejected.append({"k": remap.k, "reason": str(exc)})
            continue
        current.update(staged)
        alias.update(targets)

    records = [
        TrackRecord(r.frame, current[r.frame][r.id], r.cx, r.cy, r.w, r.h)
        for f in frames for r in orig[f]
    ]
    return TrackTable(records, frames)
