"""
Embedding providers: synthetic (simulated identities) and file-backed.

A provider turns a clear view (``FrameRef``) into an ``EmbeddingVector``. The
file-backed provider reads vectors that an external re-identification model
produced from the patch requests written by the fusion stage.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Mapping, Sequence

from ..detection.boxes import iou
from ..errors import ConfigurationError, ProviderError
from ..geometry.camera import PixelBox
from ..ingestion.formats import read_embeddings
from ..ingestion.records import CameraGtBox
from ..simulator.embeddings import EmbeddingModel, synth_embedding
from .matching import FrameRef
from .reid import EmbeddingVector

logger = logging.getLogger(__name__)

# camera index -> frame -> ground-truth image boxes
CameraTruth = Mapping[int, Mapping[int, Sequence[CameraGtBox]]]

KEY_TRACK = "track"
KEY_GT = "gt"


def resolve_identity(
    camera_gt: CameraTruth,
    camera_index: int,
    t: int,
    box: PixelBox,
    min_iou: float = 0.1,
) -> CameraGtBox | None:
    """Ground-truth box in ``(camera, t)`` that best overlaps *box*."""
    best, best_iou = None, min_iou
    for gt in camera_gt.get(camera_index, {}).get(t, ()):
        if gt.box.w <= 0 or gt.box.h <= 0:
            continue
        score = iou(gt.box, box)
        if score >= best_iou:
            best, best_iou = gt, score
    return best


class EmbeddingProvider(ABC):
    """Appearance feature source for clear views."""

    @abstractmethod
    def embed(self, ref: FrameRef) -> EmbeddingVector:
        """Feature of the player seen in *ref*; raises ``ProviderError`` when unavailable."""


class SyntheticEmbeddingProvider(EmbeddingProvider):
    """Simulated feature extractor keyed on the ground-truth identity of the patch."""

    def __init__(self, camera_gt: CameraTruth, model: EmbeddingModel | None = None, seed: int = 0):
        self.camera_gt = camera_gt
        self.model = model or EmbeddingModel()
        self.seed = seed

    def embed(self, ref: FrameRef) -> EmbeddingVector:
        gt = resolve_identity(self.camera_gt, ref.camera_index, ref.t, ref.matched_image_box)
        if gt is None:
            raise ProviderError(
                f"no ground-truth player under the patch of id {ref.track_id} "
                f"(camera {ref.camera_index}, frame {ref.t})"
            )
        draw = (ref.t << 8) | ref.camera_index
        return synth_embedding(gt.gt_id, gt.visibility, self.seed, self.model, ref.corner_count, draw)


class FileEmbeddingProvider(EmbeddingProvider):
    """Stored vectors keyed by ``(id, t, camera)``.

    With ``key = track`` the id is the track id of the request; with
    ``key = gt`` it is the ground-truth identity under the patch, which needs
    *camera_gt*.
    """

    def __init__(
        self,
        source: str | Path | Mapping[tuple[int, int, int], EmbeddingVector],
        key: str = KEY_TRACK,
        camera_gt: CameraTruth | None = None,
    ):
        if key not in (KEY_TRACK, KEY_GT):
            raise ConfigurationError(f"embedding key must be '{KEY_TRACK}' or '{KEY_GT}'")
        if key == KEY_GT and camera_gt is None:
            raise ConfigurationError("embedding key 'gt' needs camera ground truth")
        if isinstance(source, (str, Path)):
            source = read_embeddings(source)
        self.vectors = dict(source)
        self.key = key
        self.camera_gt = camera_gt

    def embed(self, ref: FrameRef) -> EmbeddingVector:
        ident = ref.track_id
        if self.key == KEY_GT:
            gt = resolve_identity(self.camera_gt, ref.camera_index, ref.t, ref.matched_image_box)
            if gt is None:
                raise ProviderError(f"no ground-truth player under camera {ref.camera_index} frame {ref.t} patch")
            ident = gt.gt_id
        try:
            return self.vectors[(ident, ref.t, ref.camera_index)]
        except KeyError:
            raise ProviderError(
                f"no stored embedding for id {ident} at frame {ref.t} camera {ref.camera_index}"
            ) from None
