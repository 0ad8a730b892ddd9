"""Constant-velocity Kalman filter over (cx, cy, aspect, height) and their velocities.

Noise standard deviations scale with box height so near and far objects are
treated alike. One time step is one frame.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoundingBox
from .errors import DegenerateBox

NDIM = 4

_F = np.eye(2 * NDIM)
_F[:NDIM, NDIM:] = np.eye(NDIM)
_H = np.eye(NDIM, 2 * NDIM)


@dataclass(frozen=True)
class KalmanConfig:
    std_weight_position: float = 1.0 / 20
    std_weight_velocity: float = 1.0 / 160
    # initial std multipliers on the weights above
    init_position_scale: float = 2.0
    init_velocity_scale: float = 20.0


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(2 * NDIM)
        cov = np.array(self.covariance, dtype=np.float64).reshape(2 * NDIM, 2 * NDIM)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def center(self) -> tuple[float, float]:
        return float(self.mean[0]), float(self.mean[1])

    @property
    def velocity(self) -> tuple[float, float]:
        return float(self.mean[4]), float(self.mean[5])


DEFAULT_CONFIG = KalmanConfig()


def box_to_measurement(box: BoundingBox) -> np.ndarray:
    if box.width <= 0 or box.height <= 0:
        raise DegenerateBox(f"box {box.as_tuple()} has zero area")
    cx, cy = box.center
    return np.array([cx, cy, box.width / box.height, box.height])


def init(box: BoundingBox, config: KalmanConfig = DEFAULT_CONFIG) -> KalmanState:
    z = box_to_measurement(box)
    mean = np.concatenate([z, np.zeros(NDIM)])
    h = z[3]
    sp = config.init_position_scale * config.std_weight_position * h
    sv = config.init_velocity_scale * config.std_weight_velocity * h
    std = np.array([sp, sp, 1e-2, sp, sv, sv, 1e-5, sv])
    return KalmanState(mean, np.diag(std ** 2))


def predict(state: KalmanState, config: KalmanConfig = DEFAULT_CONFIG) -> KalmanState:
    h = state.mean[3]
    wp, wv = config.std_weight_position, config.std_weight_velocity
    std = np.array([wp * h, wp * h, 1e-2, wp * h, wv * h, wv * h, 1e-5, wv * h])
    mean = _F @ state.mean
    cov = _F @ state.covariance @ _F.T + np.diag(std ** 2)
    return KalmanState(mean, _symmetrize(cov))


def update(state: KalmanState, observation: BoundingBox,
           config: KalmanConfig = DEFAULT_CONFIG) -> KalmanState:
    z = box_to_measurement(observation)
    h = state.mean[3]
    wp = config.std_weight_position
    r = np.diag(np.array([wp * h, wp * h, 1e-1, wp * h]) ** 2)

    p = state.covariance
    s = _H @ p @ _H.T + r
    # K = P H^T S^-1, solved via Cholesky since S is SPD
    cho = np.linalg.cholesky(s)
    pht = p @ _H.T
    gain = np.linalg.solve(cho.T, np.linalg.solve(cho, pht.T)).T
    innovation = z - _H @ state.mean
    mean = state.mean + gain @ innovation
    # Joseph form keeps the posterior PSD under rounding
    ikh = np.eye(2 * NDIM) - gain @ _H
    cov = ikh @ p @ ikh.T + gain @ r @ gain.T
    return KalmanState(mean, _symmetrize(cov))


def state_to_box(state: KalmanState) -> BoundingBox:
    cx, cy, aspect, h = state.mean[:NDIM]
    w = aspect * h
    return BoundingBox(float(cx - w / 2.0), float(cy - h / 2.0), float(max(w, 0.0)), float(max(h, 0.0)))


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)
