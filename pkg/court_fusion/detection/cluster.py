"""Connected-component detector on the BEV count image."""

from __future__ import annotations

import logging

import numpy as np
from scipy import ndimage

from ..errors import ConfigurationError, DataError
from ..geometry.bev import BevBox, BevGrid
from .base import DetectionSet, DetectorBase, DetectorFrame
from .oracle import MERGED_CONFIDENCE

logger = logging.getLogger(__name__)


class ClusterDetector(DetectorBase):
    """Boxes around clusters of occupied BEV cells.

    Occupied cells are dilated by ``dilation`` cells before labelling so that
    sparse returns from one body join up. Confidence grows with the point
    count and saturates at ``saturation_points``; a cluster wider than
    ``max_single_extent`` meters is taken to be several players and gets the
    merged confidence.
    """

    def __init__(
        self,
        grid: BevGrid | None = None,
        min_points: int = 10,
        saturation_points: int = 200,
        dilation: int = 2,
        max_single_extent: float = 1.2,
    ):
        super().__init__(grid)
        if min_points < 1 or saturation_points < 1:
            raise ConfigurationError("cluster point thresholds must be >= 1")
        if dilation < 0:
            raise ConfigurationError("dilation must be >= 0")
        self.min_points = min_points
        self.saturation_points = saturation_points
        self.dilation = dilation
        self.max_single_extent = max_single_extent

    def detect(self, frame: DetectorFrame) -> DetectionSet:
        if frame.bev is None:
            raise DataError("cluster detector needs the BEV count image")
        counts = np.asarray(frame.bev)
        if counts.shape != self.grid.shape:
            raise DataError(f"BEV image shape {counts.shape} does not match grid {self.grid.shape}")

        occupied = counts > 0
        if self.dilation:
            occupied = ndimage.binary_dilation(occupied, iterations=self.dilation)
        labels, n = ndimage.label(occupied)
        if n == 0:
            return self.empty(frame)

        point_counts = ndimage.sum_labels(counts, labels, index=np.arange(1, n + 1))
        boxes = []
        for label, slices in enumerate(ndimage.find_objects(labels), start=1):
            if slices is None:
                continue
            total = int(point_counts[label - 1])
            if total < self.min_points:
                continue
            # Shrink back to the cells that actually hold points.
            rows, cols = np.nonzero((labels[slices] == label) & (counts[slices] > 0))
            r0, c0 = slices[0].start + rows.min(), slices[1].start + cols.min()
            r1, c1 = slices[0].start + rows.max() + 1, slices[1].start + cols.max() + 1
            confidence = min(1.0, total / self.saturation_points)
            extent = max(c1 - c0, r1 - r0) * self.grid.resolution
            if extent > self.max_single_extent:
                confidence = min(confidence, MERGED_CONFIDENCE)
            boxes.append(BevBox(int(c0), int(r0), int(c1 - c0), int(r1 - r0), confidence))

        dets = DetectionSet(frame.timestamp, tuple(boxes), frame.index)
        logger.debug(self.describe(dets))
        return dets
