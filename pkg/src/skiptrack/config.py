"""Run configuration: one serialisable record that fully determines a run."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional

from .cost import CostProfile
from .errors import ConfigError
from .scheduler import PolicyKind, SkipPolicy
from .sequence_io import OracleParams
from .similarity import Measure, SimilarityConfig
from .tracker import SkipBoxSource, TrackerConfig


@dataclass
class RunConfig:
    data: str = "."
    seqs: Optional[list[str]] = None
    policy: str = "noskip"
    omega: int = 2
    pattern: Optional[str] = None
    measure: str = "ncc"
    ncc_threshold: float = 0.75
    hog_threshold: float = 0.85
    eigen_threshold: float = 100.0
    eigen_agg: str = "mean"
    eigen_scope: str = "crops"
    k: Optional[int] = None
    skip_box_source: Optional[str] = None
    det_source: str = "file"
    oracle_sigma: float = 0.0
    oracle_drop: float = 0.0
    oracle_fp: float = 0.0
    confidence_floor: float = 0.4
    iou_gate: float = 0.3
    max_lost_frames: int = 30
    min_confidence: float = 0.4
    tentative_confirm_frames: int = 2
    cost_profile: str = "mot17"
    timing: str = "simulated"
    out: str = "runs/latest"
    seed: int = 0
    jobs: int = 1

    def validate(self) -> "RunConfig":
        try:
            PolicyKind(self.policy)
            Measure(self.measure)
            if self.skip_box_source is not None:
                SkipBoxSource(self.skip_box_source)
            self.skip_policy()
            self.tracker_config()
            self.cost()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.det_source not in ("file", "oracle"):
            raise ConfigError(f"det_source must be 'file' or 'oracle', got {self.det_source!r}")
        if self.timing not in ("simulated", "wallclock"):
            raise ConfigError(f"timing must be 'simulated' or 'wallclock', got {self.timing!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self

    def similarity_config(self) -> SimilarityConfig:
        return SimilarityConfig(
            measure=Measure(self.measure),
            ncc_threshold=self.ncc_threshold,
            hog_threshold=self.hog_threshold,
            eigen_threshold=self.eigen_threshold,
            eigen_aggregate=self.eigen_agg,
            eigen_scope=self.eigen_scope,
        )

    def skip_policy(self) -> SkipPolicy:
        return SkipPolicy(
            kind=PolicyKind(self.policy),
            omega=self.omega,
            pattern=self.pattern if self.policy == PolicyKind.PERIODIC.value else None,
            similarity=self.similarity_config(),
            k=self.k,
            skip_box_source=self.skip_box_source,
        )

    def tracker_config(self) -> TrackerConfig:
        return TrackerConfig(
            iou_gate=self.iou_gate,
            max_lost_frames=self.max_lost_frames,
            min_confidence=self.min_confidence,
            tentative_confirm_frames=self.tentative_confirm_frames,
        )

    def oracle_params(self) -> OracleParams:
        return OracleParams(self.oracle_sigma, self.oracle_drop, self.oracle_fp, self.seed)

    def cost(self) -> CostProfile:
        return CostProfile.parse(self.cost_profile)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc

    def with_value(self, name: str, raw: Any) -> "RunConfig":
        """Copy with field ``name`` set from a string (or already typed) value."""
        ftypes = {f.name: f.type for f in fields(self)}
        if name not in ftypes:
            raise ConfigError(f"unknown parameter {name!r}")
        return dataclasses.replace(self, **{name: coerce(ftypes[name], raw)})


def coerce(type_name, raw: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    t = str(type_name)
    # "none" is a valid pattern name, so string fields only take "null" as empty
    empty = ("null",) if "str]" in t and "list" not in t else ("none", "null")
    if raw.lower() in empty and "Optional" in t:
        return None
    try:
        if "int" in t and "list" not in t:
            return int(raw)
        if "float" in t:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {raw!r} as {t}") from exc
    if "list" in t:
        return [s for s in raw.split(",") if s]
    return raw
