"""IoU-based tracking-by-detection: cost matrix, optimal assignment, track lifecycle."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kalman
from .core import BoundingBox, Detection, GrayImage, Track, TrackState, crop, iou_matrix
from .errors import EmptyCrop


class SkipBoxSource(str, enum.Enum):
    """Where a skipped frame's output box comes from."""

    REUSE = "reuse"      # last detected box
    KALMAN = "kalman"    # Kalman prediction for this frame


@dataclass(frozen=True)
class TrackerConfig:
    iou_gate: float = 0.3
    max_lost_frames: int = 30
    min_confidence: float = 0.4
    tentative_confirm_frames: int = 2
    kalman: kalman.KalmanConfig = field(default_factory=kalman.KalmanConfig)

    def __post_init__(self):
        if not 0.0 <= self.iou_gate <= 1.0:
            raise ValueError("iou_gate must be in [0, 1]")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValueError("min_confidence must be in [0, 1]")
        if self.max_lost_frames < 0 or self.tentative_confirm_frames < 1:
            raise ValueError("invalid lifecycle counts")


@dataclass
class AssignmentResult:
    matches: list[tuple[int, int]]
    unmatched_tracks: list[int]
    unmatched_detections: list[int]


def cost_matrix(tracks: Sequence[Track], detections: Sequence[Detection]) -> np.ndarray:
    """Entry (i, j) is 1 - IoU between track i's predicted box and detection j."""
    pred = [kalman.state_to_box(t.kalman) for t in tracks]
    return 1.0 - iou_matrix(pred, [d.box for d in detections])


def solve_assignment(costs: np.ndarray, gate: float) -> AssignmentResult:
    """Minimum-cost one-to-one assignment; pairs with cost >= gate are dropped afterwards."""
    costs = np.asarray(costs, dtype=np.float64)
    n_rows, n_cols = costs.shape if costs.ndim == 2 else (0, 0)
    matches = []
    if n_rows and n_cols:
        rows, cols = linear_sum_assignment(costs)
        matches = [(int(r), int(c)) for r, c in zip(rows, cols) if costs[r, c] < gate]
        matches.sort()
    mt = {r for r, _ in matches}
    md = {c for _, c in matches}
    return AssignmentResult(
        matches=matches,
        unmatched_tracks=[i for i in range(n_rows) if i not in mt],
        unmatched_detections=[j for j in range(n_cols) if j not in md],
    )


class Tracker:
    """Stateful single-sequence tracker.

    Call :meth:`predict` once per frame (from the second frame on), then exactly
    one of :meth:`step_with_detections` or :meth:`step_skipped`. After either step,
    :meth:`outputs` gives the ``(id, box)`` pairs emitted for the frame.
    """

    def __init__(self, config: TrackerConfig = TrackerConfig(),
                 skip_box_source: SkipBoxSource = SkipBoxSource.KALMAN):
        self.config = config
        self.skip_box_source = SkipBoxSource(skip_box_source)
        self.tracks: list[Track] = []
        self.removed: list[Track] = []
        self._next_id = 1
        self._frames_seen = 0

    @property
    def live_tracks(self) -> list[Track]:
        return [t for t in self.tracks if t.state is not TrackState.REMOVED]

    def active_tracks(self) -> list[Track]:
        return [t for t in self.tracks if t.state is TrackState.ACTIVE]

    def predict(self) -> None:
        cfg = self.config.kalman
        for t in self.tracks:
            t.kalman = kalman.predict(t.kalman, cfg)

    def predicted_box(self, track: Track) -> BoundingBox:
        return kalman.state_to_box(track.kalman)

    def estimated_box(self, track: Track) -> BoundingBox:
        """Box that would be emitted for ``track`` if the current frame were skipped."""
        if self.skip_box_source is SkipBoxSource.REUSE:
            return track.last_box
        return self.predicted_box(track)

    def step_with_detections(self, detections: Sequence[Detection],
                             frame: Optional[GrayImage] = None) -> None:
        cfg = self.config
        self._frames_seen += 1
        first_frame = self._frames_seen == 1
        dets = [d for d in detections if d.confidence >= cfg.min_confidence]
        for t in self.tracks:
            t.output_box = None

        result = solve_assignment(cost_matrix(self.tracks, dets), 1.0 - cfg.iou_gate)
        for ti, di in result.matches:
            track = self.tracks[ti]
            det = dets[di]
            track.kalman = kalman.update(track.kalman, det.box, cfg.kalman)
            track.last_box = det.box
            track.template = _safe_crop(frame, det.box)
            track.frames_since_detection = 0
            track.total_age += 1
            track.hits += 1
            if track.state is TrackState.TENTATIVE:
                if track.hits >= cfg.tentative_confirm_frames:
                    track.transition(TrackState.ACTIVE)
            else:
                track.transition(TrackState.ACTIVE)
            if track.state is TrackState.ACTIVE:
                track.output_box = det.box

        for ti in result.unmatched_tracks:
            track = self.tracks[ti]
            track.frames_since_detection += 1
            track.total_age += 1
            if track.state is TrackState.TENTATIVE:
                track.transition(TrackState.REMOVED)
            elif track.state is TrackState.ACTIVE:
                track.transition(TrackState.LOST)
            self._expire(track)

        for di in result.unmatched_detections:
            det = dets[di]
            if det.box.width <= 0 or det.box.height <= 0:
                continue
            track = Track(
                id=self._next_id,
                state=TrackState.TENTATIVE,
                kalman=kalman.init(det.box, cfg.kalman),
                last_box=det.box,
                template=_safe_crop(frame, det.box),
            )
            self._next_id += 1
            # tracks born on the first frame are trusted immediately
            if first_frame or cfg.tentative_confirm_frames <= 1:
                track.transition(TrackState.ACTIVE)
                track.output_box = det.box
            self.tracks.append(track)
        self._sweep()

    def step_skipped(self) -> None:
        self._frames_seen += 1
        for t in self.tracks:
            t.output_box = None
            t.frames_since_detection += 1
            t.total_age += 1
            if t.state is TrackState.ACTIVE:
                t.output_box = self.estimated_box(t)
            else:
                self._expire(t)
        self._sweep()

    def outputs(self) -> list[tuple[int, BoundingBox]]:
        return sorted(
            ((t.id, t.output_box) for t in self.tracks
             if t.state is TrackState.ACTIVE and t.output_box is not None),
            key=lambda p: p[0],
        )

    def _expire(self, track: Track) -> None:
        if track.state is TrackState.LOST and track.frames_since_detection > self.config.max_lost_frames:
            track.transition(TrackState.REMOVED)

    def _sweep(self) -> None:
        keep = []
        for t in self.tracks:
            if t.state is TrackState.REMOVED:
                self.removed.append(t)
            else:
                keep.append(t)
        self.tracks = keep


def _safe_crop(frame: Optional[GrayImage], box: BoundingBox) -> Optional[GrayImage]:
    if frame is None:
        return None
    try:
        return crop(frame, box)
    except EmptyCrop:
        return None
