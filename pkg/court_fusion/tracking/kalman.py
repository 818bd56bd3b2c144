"""
Constant-velocity Kalman filter for BEV boxes.

State ``(cx, cy, w, h, vx, vy)`` in meters and meters/frame. Position and
velocity are filtered; box width and height follow an exponential moving
average and keep their own (decoupled) variance, so the 6x6 covariance stays
block diagonal between the two parts.

Noise levels are absolute (meters, meters/frame) rather than fractions of the
box height: a player footprint is about the same size anywhere on the court.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError

# Indices into the state vector.
POS = [0, 1]
SIZE = [2, 3]
VEL = [4, 5]
_MOTION = POS + VEL


class BevKalmanFilter:
    """
    Parameters
    ----------
    std_position : float
        Per-frame process noise on the centre, in meters.
    std_velocity : float
        Per-frame process noise on the velocity, in meters/frame.
    std_measurement : float
        Noise of a detected centre, in meters (about one BEV cell).
    size_smoothing : float
        Weight of a new measurement in the width/height moving average.
    """

    def __init__(
        self,
        std_position: float = 0.05,
        std_velocity: float = 0.05,
        std_measurement: float = 0.05,
        size_smoothing: float = 0.5,
    ):
        if std_position <= 0 or std_velocity <= 0 or std_measurement <= 0:
            raise ConfigurationError("Kalman noise levels must be > 0")
        if not 0.0 < size_smoothing <= 1.0:
            raise ConfigurationError("size_smoothing must lie in (0, 1]")
        self._std_position = std_position
        self._std_velocity = std_velocity
        self._std_measurement = std_measurement
        self._size_smoothing = size_smoothing

        # 4-state constant-velocity model over (cx, cy, vx, vy)
        self._motion_mat = np.eye(4)
        self._motion_mat[0, 2] = 1.0
        self._motion_mat[1, 3] = 1.0
        self._update_mat = np.eye(2, 4)

    def initiate(self, measurement: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Track state from an unassociated ``(cx, cy, w, h)`` measurement; velocity starts at zero."""
        cx, cy, w, h = (float(v) for v in measurement)
        mean = np.array([cx, cy, w, h, 0.0, 0.0])
        std = [
            2 * self._std_measurement,
            2 * self._std_measurement,
            self._std_measurement,
            self._std_measurement,
            10 * self._std_velocity,
            10 * self._std_velocity,
        ]
        return mean, np.diag(np.square(std))

    def predict(self, mean: np.ndarray, covariance: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Advance one frame; the covariance grows by the process noise."""
        std_pos, std_vel = self._std_position, self._std_velocity
        mean = mean.copy()
        covariance = covariance.copy()
        motion = np.ix_(_MOTION, _MOTION)
        mean[_MOTION] = self._motion_mat @ mean[_MOTION]
        covariance[motion] = (
            self._motion_mat @ covariance[motion] @ self._motion_mat.T
            + np.diag(np.square([std_pos, std_pos, std_vel, std_vel]))
        )
        covariance[SIZE, SIZE] += std_pos ** 2
        return mean, covariance

    def project(self, mean: np.ndarray, covariance: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Position part of the state in measurement space, with innovation noise."""
        motion = np.ix_(_MOTION, _MOTION)
        projected_mean = self._update_mat @ mean[_MOTION]
        projected_cov = self._update_mat @ covariance[motion] @ self._update_mat.T
        return projected_mean, projected_cov + np.eye(2) * self._std_measurement ** 2

    def update(
        self,
        mean: np.ndarray,
        covariance: np.ndarray,
        measurement: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Correct the state with a ``(cx, cy, w, h)`` measurement."""
        measurement = np.asarray(measurement, dtype=np.float64)
        projected_mean, projected_cov = self.project(mean, covariance)
        motion = np.ix_(_MOTION, _MOTION)
        cov_motion = covariance[motion]

        kalman_gain = np.linalg.solve(projected_cov, (cov_motion @ self._update_mat.T).T).T
        innovation = measurement[:2] - projected_mean

        mean = mean.copy()
        covariance = covariance.copy()
        mean[_MOTION] = mean[_MOTION] + kalman_gain @ innovation
        new_cov = cov_motion - kalman_gain @ projected_cov @ kalman_gain.T
        covariance[motion] = (new_cov + new_cov.T) / 2.0

        alpha = self._size_smoothing
        mean[SIZE] = (1.0 - alpha) * mean[SIZE] + alpha * measurement[2:4]
        covariance[SIZE, SIZE] = (
            (1.0 - alpha) ** 2 * covariance[SIZE, SIZE] + alpha ** 2 * self._std_measurement ** 2
        )
        return mean, covariance
