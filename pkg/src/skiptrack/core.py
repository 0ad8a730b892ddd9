"""Geometric and track-domain value types: boxes, detections, tracks, gray images."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import EmptyCrop

if TYPE_CHECKING:
    from .kalman import KalmanState

# BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned box in MOTChallenge form: top-left corner plus size, in pixels."""

    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        vals = (self.left, self.top, self.width, self.height)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box coordinates: {vals}")
        if self.width < 0 or self.height < 0:
            raise ValueError(f"negative box size: {vals}")

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return self.left + self.width / 2.0, self.top + self.height / 2.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.left, self.top, self.width, self.height)


@dataclass(frozen=True, slots=True)
class Detection:
    box: BoundingBox
    confidence: float
    frame_index: int

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.frame_index < 1:
            raise ValueError("frame_index is 1-based")


class TrackState(enum.Enum):
    TENTATIVE = "Tentative"
    ACTIVE = "Active"
    LOST = "Lost"
    REMOVED = "Removed"


_ALLOWED_TRANSITIONS = {
    (TrackState.TENTATIVE, TrackState.ACTIVE),
    (TrackState.ACTIVE, TrackState.LOST),
    (TrackState.LOST, TrackState.ACTIVE),
    (TrackState.TENTATIVE, TrackState.REMOVED),
    (TrackState.LOST, TrackState.REMOVED),
}


@dataclass(slots=True)
class Track:
    """One tracked object. Mutable; owned by a single :class:`~skiptrack.tracker.Tracker`."""

    id: int
    state: TrackState
    kalman: "KalmanState"
    last_box: BoundingBox
    frames_since_detection: int = 0
    total_age: int = 1
    hits: int = 1
    # crop of last_box taken from the frame it was detected on
    template: Optional["GrayImage"] = None
    # box emitted for the current frame (None when nothing is emitted)
    output_box: Optional[BoundingBox] = None

    def transition(self, new_state: TrackState) -> None:
        if new_state == self.state:
            return
        if (self.state, new_state) not in _ALLOWED_TRANSITIONS:
            raise ValueError(f"illegal track transition {self.state.value} -> {new_state.value}")
        self.state = new_state


@dataclass(frozen=True)
class GrayImage:
    """Luminance image; ``data`` is a (height, width) float64 array, row-major."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"GrayImage needs a 2-D array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "GrayImage":
        values = np.asarray(values, dtype=np.float64)
        if values.size != width * height:
            raise ValueError(f"expected {width * height} values, got {values.size}")
        return cls(values.reshape(height, width))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def size(self) -> int:
        return self.data.size


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    return rgb[..., 0] * LUMA_WEIGHTS[0] + rgb[..., 1] * LUMA_WEIGHTS[1] + rgb[..., 2] * LUMA_WEIGHTS[2]


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return min(1.0, max(0.0, inter / union))


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise IoU of two box collections given as (N, 4) ltwh arrays or box lists."""
    a = _as_ltwh_array(boxes_a)
    b = _as_ltwh_array(boxes_b)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    ax2 = a[:, 0] + a[:, 2]
    ay2 = a[:, 1] + a[:, 3]
    bx2 = b[:, 0] + b[:, 2]
    by2 = b[:, 1] + b[:, 3]
    iw = np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(ay2[:, None], by2[None, :]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
    return np.clip(out, 0.0, 1.0)


def _as_ltwh_array(boxes) -> np.ndarray:
    if isinstance(boxes, np.ndarray):
        return boxes.reshape(-1, 4).astype(np.float64)
    return np.array([bx.as_tuple() for bx in boxes], dtype=np.float64).reshape(-1, 4)


def crop_bounds(image_width: int, image_height: int, box: BoundingBox) -> tuple[int, int, int, int]:
    """Integer (x0, y0, x1, y1) of ``box`` on the pixel grid, floored/ceiled then clamped."""
    x0 = max(0, math.floor(box.left))
    y0 = max(0, math.floor(box.top))
    x1 = min(image_width, math.ceil(box.right))
    y1 = min(image_height, math.ceil(box.bottom))
    return x0, y0, x1, y1


def crop(image: GrayImage, box: BoundingBox) -> GrayImage:
    if image.size == 0:
        raise EmptyCrop("source image is empty")
    x0, y0, x1, y1 = crop_bounds(image.width, image.height, box)
    if x1 <= x0 or y1 <= y0:
        raise EmptyCrop(f"box {box.as_tuple()} lies outside the {image.width}x{image.height} image")
    return GrayImage(image.data[y0:y1, x0:x1].copy())
