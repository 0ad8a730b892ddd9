"""Simulated latency accounting for detect/skip schedules.

A detected frame costs ``t_detection + t_decision``; a skipped frame costs
``t_decision + t_estimation``. The no-skip baseline is ``n_frames * t_detection``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

# reference per-stage timings, average seconds per frame
MOT17_PROFILE = dict(t_detection=0.248551353, t_decision=0.026890381, t_estimation=0.000341388)
MOT15_PROFILE = dict(t_detection=0.246894905, t_decision=0.011596515, t_estimation=0.000252304)


@dataclass(frozen=True)
class CostProfile:
    t_detection: float = MOT17_PROFILE["t_detection"]
    t_decision: float = MOT17_PROFILE["t_decision"]
    t_estimation: float = MOT17_PROFILE["t_estimation"]

    def __post_init__(self):
        if min(self.t_detection, self.t_decision, self.t_estimation) < 0:
            raise ValueError("stage timings must be nonnegative")

    @classmethod
    def mot17(cls) -> "CostProfile":
        return cls(**MOT17_PROFILE)

    @classmethod
    def mot15(cls) -> "CostProfile":
        return cls(**MOT15_PROFILE)

    @classmethod
    def parse(cls, text: str) -> "CostProfile":
        """``mot17``, ``mot15``, a JSON file path, or ``t_det,t_dec,t_est`` in seconds."""
        key = text.strip().lower()
        if key == "mot17":
            return cls.mot17()
        if key == "mot15":
            return cls.mot15()
        if Path(text).is_file():
            return cls(**json.loads(Path(text).read_text()))
        parts = [p for p in text.split(",") if p.strip()]
        if len(parts) == 3:
            return cls(*(float(p) for p in parts))
        raise ValueError(f"unrecognised cost profile {text!r}")


@dataclass
class CostLedger:
    n_frames: int = 0
    n_detected: int = 0
    n_skipped: int = 0
    total_time: float = 0.0
    baseline_time: float = 0.0

    @property
    def speedup_vs_noskip(self) -> float:
        return self.total_time / self.baseline_time if self.baseline_time > 0 else float("nan")

    @property
    def skip_fraction(self) -> float:
        return self.n_skipped / self.n_frames if self.n_frames else 0.0

    def merged(self, other: "CostLedger") -> "CostLedger":
        return CostLedger(
            self.n_frames + other.n_frames,
            self.n_detected + other.n_detected,
            self.n_skipped + other.n_skipped,
            self.total_time + other.total_time,
            self.baseline_time + other.baseline_time,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["speedup_vs_noskip"] = self.speedup_vs_noskip
        return d


def frame_cost(detected: bool, profile: CostProfile) -> float:
    if detected:
        return profile.t_detection + profile.t_decision
    return profile.t_decision + profile.t_estimation


def accumulate(ledger: CostLedger, detected: bool, profile: CostProfile) -> CostLedger:
    """Charge one frame to ``ledger`` in place and return it."""
    ledger.n_frames += 1
    if detected:
        ledger.n_detected += 1
    else:
        ledger.n_skipped += 1
    ledger.total_time += frame_cost(detected, profile)
    ledger.baseline_time += profile.t_detection
    return ledger


def ledger_from_actions(actions: Iterable[bool], profile: CostProfile) -> CostLedger:
    """Rebuild a ledger from a sequence of detect (True) / skip (False) flags."""
    ledger = CostLedger()
    for detected in actions:
        accumulate(ledger, detected, profile)
    return ledger


def speedup(ledger: CostLedger, profile: CostProfile) -> float:
    """``t_total_policy / t_total_noskip`` with the no-skip baseline ``n_frames * t_detection``."""
    if ledger.n_frames <= 0:
        raise ValueError("empty ledger")
    return ledger.total_time / (ledger.n_frames * profile.t_detection)


LEDGER_COLUMNS = ("sequence", "n_frames", "n_detected", "n_skipped", "total_time_s", "speedup")


def ledger_row(sequence: str, ledger: CostLedger) -> str:
    return (f"{sequence},{ledger.n_frames},{ledger.n_detected},{ledger.n_skipped},"
            f"{ledger.total_time:.9f},{ledger.speedup_vs_noskip:.6f}")


def write_ledgers(path, ledgers: dict[str, CostLedger]) -> None:
    lines = [",".join(LEDGER_COLUMNS)]
    lines += [ledger_row(name, ledgers[name]) for name in sorted(ledgers)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_ledgers(path) -> dict[str, dict]:
    rows = Path(path).read_text().splitlines()
    out = {}
    for line in rows[1:]:
        if not line.strip():
            continue
        seq, n, d, s, tot, sp = line.split(",")
        out[seq] = dict(n_frames=int(n), n_detected=int(d), n_skipped=int(s),
                        total_time_s=float(tot), speedup=float(sp))
    return out
