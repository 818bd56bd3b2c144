"""
Synthetic appearance embeddings.

Each ground-truth identity owns a unit anchor vector. An observation is the
anchor plus isotropic Gaussian noise whose expected norm is

    sigma = base_sigma * (1 + visibility_gain * (1 - visibility)) * (1 + inclusion / 8)

so partly hidden or crowded views drift further from the anchor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError
from ..fusion.reid import EmbeddingVector

ANCHOR_MODES = ("random", "orthogonal")


@dataclass(frozen=True)
class EmbeddingModel:
    """Parameters of the synthetic feature extractor.

    Attributes:
        dim: Feature dimension.
        base_sigma: Expected noise norm of a fully visible, unobstructed view.
        visibility_gain: Extra noise factor per unit of missing visibility.
        anchors: ``random`` (seeded Gaussian) or ``orthogonal`` (basis vector
            ``e_{id mod dim}``).
    """

    dim: int = 128
    base_sigma: float = 0.05
    visibility_gain: float = 2.0
    anchors: str = "random"

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigurationError("embedding dim must be >= 2")
        if self.base_sigma < 0 or self.visibility_gain < 0:
            raise ConfigurationError("embedding noise parameters must be >= 0")
        if self.anchors not in ANCHOR_MODES:
            raise ConfigurationError(f"unknown anchor mode '{self.anchors}'")

    def sigma(self, visibility: float, inclusion: int = 0) -> float:
        return (
            self.base_sigma
            * (1.0 + self.visibility_gain * (1.0 - visibility))
            * (1.0 + inclusion / 8.0)
        )


def anchor_vector(gt_id: int, seed: int, model: EmbeddingModel) -> np.ndarray:
    if model.anchors == "orthogonal":
        v = np.zeros(model.dim)
        v[int(gt_id) % model.dim] = 1.0
        return v
    v = np.random.default_rng([int(seed), int(gt_id) & 0xFFFFFFFF, 0]).normal(size=model.dim)
    return v / np.linalg.norm(v)


def synth_embedding(
    gt_id: int,
    visibility: float,
    seed: int,
    model: EmbeddingModel | None = None,
    inclusion: int = 0,
    draw: int = 0,
) -> EmbeddingVector:
    """One noisy observation of identity *gt_id*.

    *draw* selects an independent noise sample; the anchor depends only on
    ``(seed, gt_id)``.
    """
    model = model or EmbeddingModel()
    if not 0.0 <= visibility <= 1.0:
        raise DataError(f"visibility must lie in [0, 1], got {visibility}")
    anchor = anchor_vector(gt_id, seed, model)
    sigma = model.sigma(visibility, inclusion)
    if sigma == 0.0:
        return EmbeddingVector(anchor)
    rng = np.random.default_rng([int(seed), int(gt_id) & 0xFFFFFFFF, 1, int(draw) & 0xFFFFFFFF])
    noise = rng.normal(0.0, sigma / math.sqrt(model.dim), size=model.dim)
    return EmbeddingVector(anchor + noise)
