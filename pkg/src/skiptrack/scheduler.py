"""Per-frame detect-or-skip policies and the sequence processing loop."""
from __future__ import annotations

import enum
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import cost
from .core import BoundingBox, GrayImage, TrackState, crop
from .errors import EmptyCrop, MissingDetections
from .sequence_io import DetectionSource, SequenceBundle
from .similarity import Measure, NoTracks, Score, SimilarityConfig, eigen_similarity, frame_similarity, passes
from .tracker import SkipBoxSource, Tracker, TrackerConfig


class PolicyKind(str, enum.Enum):
    NOSKIP = "noskip"
    PERIODIC = "periodic"
    ALTERNATE = "alternate"
    CONTEXT = "context-aware"


class Action(str, enum.Enum):
    DETECT = "Detect"
    SKIP = "Skip"


class Reason(str, enum.Enum):
    FIRST_FRAME = "FirstFrame"
    FORCED = "Forced"
    BELOW_THRESHOLD = "BelowThreshold"
    ABOVE_THRESHOLD = "AboveThreshold"
    PERIODIC = "Periodic"
    NO_TRACKS = "NoTracks"


# periodic patterns for the "fraction of frames skipped" sweep
NAMED_PATTERNS = {
    "none": "D",
    "skip-1-of-3": "DDS",
    "skip-1-of-2": "DS",
    "skip-2-of-3": "DSS",
}


@dataclass(frozen=True)
class SkipPolicy:
    kind: PolicyKind = PolicyKind.NOSKIP
    omega: int = 1
    pattern: Optional[str] = None
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    k: Optional[int] = None  # None: derived from the sequence FPS
    skip_box_source: Optional[SkipBoxSource] = None  # None: policy default

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.omega < 1:
            raise ValueError("omega must be >= 1")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.pattern is not None:
            pat = NAMED_PATTERNS.get(self.pattern, self.pattern).upper()
            if not pat or set(pat) - {"D", "S"} or pat[0] != "D":
                raise ValueError(f"pattern {self.pattern!r} must be a D/S string starting with D")
            object.__setattr__(self, "pattern", pat)
        if self.skip_box_source is not None:
            object.__setattr__(self, "skip_box_source", SkipBoxSource(self.skip_box_source))

    @classmethod
    def no_skip(cls) -> "SkipPolicy":
        return cls(PolicyKind.NOSKIP)

    @classmethod
    def periodic(cls, omega: int = 2, pattern: Optional[str] = None, **kw) -> "SkipPolicy":
        return cls(PolicyKind.PERIODIC, omega=omega, pattern=pattern, **kw)

    @classmethod
    def alternate(cls, **kw) -> "SkipPolicy":
        return cls(PolicyKind.ALTERNATE, **kw)

    @classmethod
    def context_aware(cls, similarity: SimilarityConfig = SimilarityConfig(), k: Optional[int] = None,
                      **kw) -> "SkipPolicy":
        return cls(PolicyKind.CONTEXT, similarity=similarity, k=k, **kw)

    @property
    def box_source(self) -> SkipBoxSource:
        if self.skip_box_source is not None:
            return self.skip_box_source
        # periodic baseline reuses the latest detections; the others estimate
        if self.kind in (PolicyKind.PERIODIC, PolicyKind.NOSKIP):
            return SkipBoxSource.REUSE
        return SkipBoxSource.KALMAN

    def cadence(self, fps: float) -> int:
        return self.k if self.k is not None else default_forced_cadence(fps)

    def describe(self) -> str:
        if self.kind is PolicyKind.PERIODIC:
            return f"periodic({self.pattern or self.omega})"
        if self.kind is PolicyKind.CONTEXT:
            return f"context-aware({self.similarity.measure.value},k={self.k})"
        return self.kind.value


@dataclass(frozen=True)
class SkipDecision:
    frame_index: int
    action: Action
    reason: Reason
    similarity_score: Optional[float] = None
    frames_since_detection: int = 0

    @property
    def detected(self) -> bool:
        return self.action is Action.DETECT


def default_forced_cadence(fps: float) -> int:
    if not fps > 0:
        raise ValueError("fps must be positive")
    # round half away from zero, unlike Python's banker's rounding
    return max(2, int(math.floor(fps / 5.0 + 0.5)))


def decide(policy: SkipPolicy, frame_index: int, frames_since_last_detection: int,
           similarity: Optional[Score] = None, k: Optional[int] = None) -> SkipDecision:
    if frame_index < 1:
        raise ValueError("frame_index is 1-based")
    score = None if similarity is None or similarity is NoTracks else float(similarity)

    def out(action, reason):
        return SkipDecision(frame_index, action, reason, score, frames_since_last_detection)

    if frame_index == 1:
        return out(Action.DETECT, Reason.FIRST_FRAME)
    kind = policy.kind
    if kind is PolicyKind.NOSKIP:
        return out(Action.DETECT, Reason.PERIODIC)
    if kind is PolicyKind.PERIODIC:
        if policy.pattern is not None:
            detect = policy.pattern[(frame_index - 1) % len(policy.pattern)] == "D"
        else:
            detect = (frame_index - 1) % policy.omega == 0
        return out(Action.DETECT if detect else Action.SKIP, Reason.PERIODIC)
    if kind is PolicyKind.ALTERNATE:
        return out(Action.DETECT if frame_index % 2 == 1 else Action.SKIP, Reason.PERIODIC)

    cadence = k if k is not None else policy.k
    if cadence is None:
        raise ValueError("context-aware decisions need a forced cadence k")
    if frames_since_last_detection >= cadence:
        return out(Action.DETECT, Reason.FORCED)
    if similarity is None or similarity is NoTracks:
        return out(Action.DETECT, Reason.NO_TRACKS)
    ok = passes(score, policy.similarity)
    inverted = policy.similarity.measure is Measure.EIGEN
    if ok:
        return out(Action.SKIP, Reason.BELOW_THRESHOLD if inverted else Reason.ABOVE_THRESHOLD)
    return out(Action.DETECT, Reason.ABOVE_THRESHOLD if inverted else Reason.BELOW_THRESHOLD)


def replay(scores: Sequence[Optional[Score]], policy: SkipPolicy, k: Optional[int] = None) -> list[SkipDecision]:
    """Re-run the decision rule over recorded per-frame similarity scores (frame 1 first)."""
    decisions = []
    last = 1
    for i, s in enumerate(scores, start=1):
        d = decide(policy, i, i - last if i > 1 else 0, s, k)
        if d.detected:
            last = i
        decisions.append(d)
    return decisions


# ---------------------------------------------------------------- sequence loop

@dataclass
class SequenceRun:
    name: str
    rows: dict[int, list[tuple[int, BoundingBox]]]
    decisions: list[SkipDecision]
    ledger: cost.CostLedger
    scores: list[Optional[Score]]
    detector_calls: list[int]
    created_ids: list[int] = field(default_factory=list)

    @property
    def frames_skipped(self) -> int:
        return sum(1 for d in self.decisions if not d.detected)

    @property
    def skip_pct(self) -> float:
        return 100.0 * self.frames_skipped / len(self.decisions) if self.decisions else 0.0


def run_sequence(bundle: SequenceBundle, policy: SkipPolicy,
                 tracker_config: TrackerConfig = TrackerConfig(),
                 source: Optional[DetectionSource] = None,
                 profile: cost.CostProfile = cost.CostProfile(),
                 timing: str = "simulated") -> SequenceRun:
    """Process every frame of ``bundle`` under ``policy``.

    The detection source is queried only on Detect frames. ``timing`` is
    ``"simulated"`` (charge ``profile``) or ``"wallclock"`` (charge measured
    per-stage durations).
    """
    if timing not in ("simulated", "wallclock"):
        raise ValueError(f"unknown timing mode {timing!r}")
    if source is None:
        source = DetectionSource.file_backed(bundle)
    tracker = Tracker(tracker_config, policy.box_source)
    needs_images = policy.kind is PolicyKind.CONTEXT
    sim_cfg = policy.similarity
    k = policy.cadence(bundle.fps) if policy.kind is PolicyKind.CONTEXT else None

    rows: dict[int, list[tuple[int, BoundingBox]]] = {}
    decisions: list[SkipDecision] = []
    scores: list[Optional[Score]] = []
    ledger = cost.CostLedger()
    last_detect = 0
    last_detect_image: Optional[GrayImage] = None
    clock = time.perf_counter

    for f in range(1, bundle.length + 1):
        t0 = clock()
        image = bundle.frame(f) if needs_images else None
        score: Optional[Score] = None
        if f > 1:
            tracker.predict()
            if needs_images:
                score = _similarity(tracker, image, last_detect_image, sim_cfg)
        decision = decide(policy, f, f - last_detect if f > 1 else 0, score, k)
        t1 = clock()

        if decision.detected:
            try:
                dets = source(f)
            except KeyError:
                raise MissingDetections(f"{bundle.name}: no detections for frame {f}") from None
            tracker.step_with_detections(dets, image)
            last_detect = f
            last_detect_image = image
        else:
            tracker.step_skipped()
        t2 = clock()

        out = tracker.outputs()
        if out:
            rows[f] = out
        decisions.append(decision)
        scores.append(score)
        if timing == "simulated":
            cost.accumulate(ledger, decision.detected, profile)
        else:
            _accumulate_measured(ledger, decision.detected, t1 - t0, t2 - t1, profile)

    created = sorted({t.id for t in tracker.tracks} | {t.id for t in tracker.removed})
    return SequenceRun(bundle.name, rows, decisions, ledger, scores, list(source.calls), created)


def _similarity(tracker: Tracker, image: GrayImage, last_detect_image: Optional[GrayImage],
                cfg: SimilarityConfig) -> Score:
    if cfg.measure is Measure.EIGEN and cfg.eigen_scope == "whole":
        if last_detect_image is None:
            return NoTracks
        return eigen_similarity(last_detect_image, image)
    templates, estimates = [], []
    for t in tracker.tracks:
        if t.state not in (TrackState.ACTIVE, TrackState.TENTATIVE) or t.template is None:
            continue
        templates.append(t.template)
        # the decision always looks where the filter expects the object, whatever gets emitted
        try:
            estimates.append(crop(image, tracker.predicted_box(t)))
        except EmptyCrop:
            estimates.append(None)
    return frame_similarity(templates, estimates, cfg)


def _accumulate_measured(ledger: cost.CostLedger, detected: bool, t_decide: float, t_step: float,
                         profile: cost.CostProfile) -> None:
    ledger.n_frames += 1
    if detected:
        ledger.n_detected += 1
    else:
        ledger.n_skipped += 1
    ledger.total_time += t_decide + t_step
    ledger.baseline_time += profile.t_detection


# ---------------------------------------------------------------- decision log

LOG_COLUMNS = ("frame_index", "action", "reason", "similarity_score", "frames_since_detection")


def format_decision_log(decisions: Sequence[SkipDecision]) -> str:
    buf = io.StringIO()
    buf.write(",".join(LOG_COLUMNS) + "\n")
    for d in decisions:
        s = "" if d.similarity_score is None else f"{d.similarity_score:.6f}"
        buf.write(f"{d.frame_index},{d.action.value},{d.reason.value},{s},{d.frames_since_detection}\n")
    return buf.getvalue()


def write_decision_log(path, decisions: Sequence[SkipDecision]) -> None:
    Path(path).write_text(format_decision_log(decisions))


def read_decision_log(path) -> list[SkipDecision]:
    lines = Path(path).read_text().splitlines()
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        f, a, r, s, fsd = line.split(",")
        out.append(SkipDecision(int(f), Action(a), Reason(r), float(s) if s else None, int(fsd)))
    return out


def max_consecutive_skips(decisions: Sequence[SkipDecision]) -> int:
    best = run = 0
    for d in decisions:
        run = 0 if d.detected else run + 1
        best = max(best, run)
    return best
