"""
Session-level driver for occlusion repair.

For every closed occlusion session the pre-occlusion ids are searched
backward from ``t_s`` and the post-occlusion ids forward from ``t_e``; each
clear view is embedded and the session is resolved into an ``IdRemap``.
All remaps are then applied to the track table in time order.
"""

from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from ..errors import ConfigurationError, ProviderError
from ..tracking.tracker import TrackTable
from .matching import BACKWARD, FORWARD, FrameRef, FusionContext, SearchConfig, format_patch_request, frame_search
from .occlusion import OcclusionSession
from .providers import EmbeddingProvider
from .reid import SCOPE_ALL, SCOPE_LOST_GAIN, EmbeddingVector, IdRemap, apply_remap, resolve_session

logger = logging.getLogger(__name__)

STATUS_REPAIRED = "repaired"
STATUS_CONSISTENT = "consistent"
STATUS_UNREPAIRED = "unrepaired"
STATUS_REJECTED = "rejected"
STATUS_OPEN = "open"


@dataclass(frozen=True)
class ReidConfig:
    scope: str = SCOPE_ALL
    min_cosine: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.scope not in (SCOPE_ALL, SCOPE_LOST_GAIN):
            raise ConfigurationError(f"unknown reid scope '{self.scope}'")
        if self.min_cosine is not None and not -1.0 <= self.min_cosine <= 1.0:
            raise ConfigurationError("min_cosine must lie in [-1, 1]")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")


def _search_side(
    ids: Sequence[int],
    t0: int,
    direction: str,
    k: int,
    ctx: FusionContext,
    search: SearchConfig,
    provider: EmbeddingProvider | None,
    patches: list[str],
    misses: list[str],
) -> dict[int, EmbeddingVector]:
    features: dict[int, EmbeddingVector] = {}
    for track_id in sorted(ids):
        ref: FrameRef | None = frame_search(track_id, t0, direction, ctx, search)
        if ref is None:
            misses.append(f"id {track_id}: no clear {direction} view")
            continue
        patches.append(format_patch_request(ref, k, direction))
        if provider is None:
            misses.append(f"id {track_id}: no embedding provider")
            continue
        try:
            features[track_id] = provider.embed(ref)
        except ProviderError as exc:
            misses.append(f"id {track_id}: {exc}")
    return features


def resolve_one(
    session: OcclusionSession,
    ctx: FusionContext,
    search: SearchConfig,
    provider: EmbeddingProvider | None,
    reid: ReidConfig,
) -> dict[str, Any]:
    """Search, embed and pair one session; the outcome dict is JSON-serializable except ``remap``."""
    patches: list[str] = []
    misses: list[str] = []
    pre = _search_side(session.pre_ids, session.t_s, BACKWARD, session.k, ctx, search, provider, patches, misses)
    post = _search_side(session.post_ids, session.t_e, FORWARD, session.k, ctx, search, provider, patches, misses)
    remap = resolve_session(session, pre, post, reid.scope, reid.min_cosine)
    if remap:
        status = STATUS_REPAIRED
    elif remap.pairs:
        status = STATUS_CONSISTENT
    else:
        status = STATUS_UNREPAIRED
    return {
        "k": session.k,
        "t_s": session.t_s,
        "t_e": session.t_e,
        "lost": sorted(session.lost_ids),
        "gain": sorted(session.gain_ids),
        "pre_features": sorted(pre),
        "post_features": sorted(post),
        "pairs": [[a, b, round(s, 6)] for a, b, s in remap.pairs],
        "mapping": {str(k): v for k, v in sorted(remap.mapping.items())},
        "status": status,
        "misses": misses,
        "patches": patches,
        "remap": remap,
    }


def _report(progress_callback, k: int, outcome: dict[str, Any]) -> None:
    if progress_callback:
        progress_callback({"type": "progress", "stage": "fusion", "message": f"session {k}: {outcome['status']}"})


def run_sessions(
    table: TrackTable,
    sessions: Sequence[OcclusionSession],
    ctx: FusionContext,
    provider: EmbeddingProvider | None,
    search: SearchConfig | None = None,
    reid: ReidConfig | None = None,
    progress_callback: Callable[[dict], None] | None = None,
) -> dict[str, Any]:
    """Repair *table* across all *sessions*.

    Returns
    -------
    dict with keys:
        - ``"tracks"``  : the repaired ``TrackTable``
        - ``"results"`` : ``{k: outcome}`` for every attempted session
        - ``"skipped"`` : ``[k, ...]`` of open sessions
        - ``"errors"``  : ``{k: message}`` for sessions whose remap was rejected
        - ``"patches"`` : patch request lines for an external embedding model
    """
    search = search or SearchConfig()
    reid = reid or ReidConfig()
    closed = [s for s in sessions if not s.open]
    skipped = [s.k for s in sessions if s.open]
    for k in skipped:
        logger.info("session %d is open at sequence end; skipped", k)

    results: dict[int, dict[str, Any]] = {}
    if reid.workers > 1 and len(closed) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=reid.workers) as executor:
            futures = {
                executor.submit(resolve_one, s, ctx, search, provider, reid): s.k for s in closed
            }
            for fut in concurrent.futures.as_completed(futures):
                k = futures[fut]
                results[k] = fut.result()
                _report(progress_callback, k, results[k])
    else:
        for s in closed:
            results[s.k] = resolve_one(s, ctx, search, provider, reid)
            _report(progress_callback, s.k, results[s.k])

    remaps: list[IdRemap] = [results[k].pop("remap") for k in sorted(results)]
    rejected: list[dict] = []
    repaired = apply_remap(table, remaps, rejected)
    errors = {}
    for entry in rejected:
        results[entry["k"]]["status"] = STATUS_REJECTED
        errors[entry["k"]] = entry["reason"]

    patches = [line for k in sorted(results) for line in results[k]["patches"]]
    return {
        "tracks": repaired,
        "results": {k: results[k] for k in sorted(results)},
        "skipped": skipped,
        "errors": errors,
        "patches": patches,
    }
