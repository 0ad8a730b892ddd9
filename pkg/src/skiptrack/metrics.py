"""CLEAR (MOTA/MOTP/IDSW), identity (IDP/IDR/IDF1) and HOTA (DetA/AssA/LocA) metrics.

Inputs are frame-indexed mappings ``{frame: [(object_id, BoundingBox), ...]}``
for ground truth and predictions. Aggregation over sequences pools raw
counts and sums, never averaged percentages.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import BoundingBox, iou_matrix

ALPHAS = tuple(i / 20 for i in range(1, 20))
EPS = 1e-10
# continuity bonus: dominates any IoU difference when choosing CLEAR matches
CONTINUITY_BONUS = 1000.0

FrameBoxes = Mapping[int, Sequence[tuple[int, BoundingBox]]]


@dataclass
class FrameMatch:
    frame: int
    matches: list[tuple[int, int, float]]  # (gt_id, pred_id, iou)
    fn_ids: list[int]
    fp_ids: list[int]


@dataclass
class AlphaRow:
    alpha: float
    tp: int
    fn: int
    fp: int
    ass_sum: float
    loc_sum: float

    @property
    def deta(self) -> float:
        denom = self.tp + self.fn + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def assa(self) -> float:
        return self.ass_sum / self.tp if self.tp else 0.0

    @property
    def loca(self) -> float:
        return self.loc_sum / self.tp if self.tp else 0.0

    @property
    def hota(self) -> float:
        return math.sqrt(self.deta * self.assa)


@dataclass
class MetricsReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    gt: int = 0
    idsw: int = 0
    motp_sum: float = 0.0
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0
    per_alpha: list[AlphaRow] = field(default_factory=list)
    frames: int = 0
    frames_skipped: int = 0

    # ---- CLEAR
    @property
    def mota(self) -> float:
        if self.gt == 0:
            return math.nan  # undefined without ground truth
        return 1.0 - (self.fn + self.fp + self.idsw) / self.gt

    @property
    def motp(self) -> float:
        return self.motp_sum / self.tp if self.tp else 0.0

    @property
    def motp_distance(self) -> float:
        return 1.0 - self.motp if self.tp else 0.0

    # ---- identity
    @property
    def idp(self) -> float:
        d = self.idtp + self.idfp
        return self.idtp / d if d else 0.0

    @property
    def idr(self) -> float:
        d = self.idtp + self.idfn
        return self.idtp / d if d else 0.0

    @property
    def idf1(self) -> float:
        d = 2 * self.idtp + self.idfp + self.idfn
        return 2 * self.idtp / d if d else 0.0

    # ---- HOTA
    @property
    def hota(self) -> float:
        return float(np.mean([r.hota for r in self.per_alpha])) if self.per_alpha else 0.0

    @property
    def deta(self) -> float:
        return float(np.mean([r.deta for r in self.per_alpha])) if self.per_alpha else 0.0

    @property
    def assa(self) -> float:
        return float(np.mean([r.assa for r in self.per_alpha])) if self.per_alpha else 0.0

    @property
    def loca(self) -> float:
        vals = [r.loca for r in self.per_alpha if r.tp > 0]
        return float(np.mean(vals)) if vals else 0.0

    @property
    def skip_pct(self) -> float:
        return 100.0 * self.frames_skipped / self.frames if self.frames else 0.0

    def summary(self) -> dict:
        return {
            "MOTA": self.mota, "MOTP": self.motp, "MOTP_dist": self.motp_distance,
            "IDF1": self.idf1, "IDP": self.idp, "IDR": self.idr, "IDSW": self.idsw,
            "HOTA": self.hota, "DetA": self.deta, "AssA": self.assa, "LocA": self.loca,
            "FramesSkipped": self.frames_skipped, "SkipPct": self.skip_pct,
            "TP": self.tp, "FP": self.fp, "FN": self.fn, "GT": self.gt,
            "IDTP": self.idtp, "IDFP": self.idfp, "IDFN": self.idfn, "Frames": self.frames,
        }

    def to_json(self) -> dict:
        d = asdict(self)
        d["summary"] = self.summary()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MetricsReport":
        d = {k: v for k, v in d.items() if k != "summary"}
        d["per_alpha"] = [AlphaRow(**r) for r in d.get("per_alpha", [])]
        return cls(**d)


def combine(reports: Iterable[MetricsReport]) -> MetricsReport:
    """Pool counts across sequences."""
    reports = list(reports)
    out = MetricsReport()
    out.per_alpha = [AlphaRow(a, 0, 0, 0, 0.0, 0.0) for a in ALPHAS]
    for r in reports:
        for name in ("tp", "fp", "fn", "gt", "idsw", "idtp", "idfp", "idfn", "frames", "frames_skipped"):
            setattr(out, name, getattr(out, name) + getattr(r, name))
        out.motp_sum += r.motp_sum
        for acc, row in zip(out.per_alpha, r.per_alpha):
            acc.tp += row.tp
            acc.fn += row.fn
            acc.fp += row.fp
            acc.ass_sum += row.ass_sum
            acc.loc_sum += row.loc_sum
    return out


# ---------------------------------------------------------------- preprocessing

class _Indexed:
    """Frame-wise id-index arrays and box arrays for one side (gt or prediction)."""

    def __init__(self, data: FrameBoxes, frames: Sequence[int]):
        ids = sorted({oid for f in frames for oid, _ in data.get(f, [])})
        self.ids = ids
        self.index = {oid: i for i, oid in enumerate(ids)}
        self.per_frame_ids = []
        self.per_frame_boxes = []
        for f in frames:
            entries = list(data.get(f, []))
            seen = set()
            for oid, _ in entries:
                if oid in seen:
                    raise ValueError(f"object id {oid} appears twice in frame {f}")
                seen.add(oid)
            self.per_frame_ids.append(np.array([self.index[o] for o, _ in entries], dtype=int))
            self.per_frame_boxes.append(np.array([b.as_tuple() for _, b in entries], dtype=float).reshape(-1, 4))

    def __len__(self):
        return len(self.ids)


def _frames(gt: FrameBoxes, pred: FrameBoxes, n_frames: Optional[int]) -> list[int]:
    if n_frames is not None:
        return list(range(1, n_frames + 1))
    keys = set(gt) | set(pred)
    return list(range(1, max(keys) + 1)) if keys else []


# ---------------------------------------------------------------- CLEAR

def match_frames(gt: FrameBoxes, pred: FrameBoxes, iou_threshold: float = 0.5,
                 n_frames: Optional[int] = None) -> list[FrameMatch]:
    """Per-frame one-to-one matching at IoU >= threshold, keeping last frame's pairs when possible."""
    frames = _frames(gt, pred, n_frames)
    g = _Indexed(gt, frames)
    p = _Indexed(pred, frames)
    prev_pair = np.full(len(g), -1, dtype=int)
    out = []
    for fi, f in enumerate(frames):
        gid, gbox = g.per_frame_ids[fi], g.per_frame_boxes[fi]
        pid, pbox = p.per_frame_ids[fi], p.per_frame_boxes[fi]
        matched: list[tuple[int, int, float]] = []
        new_prev = np.full(len(g), -1, dtype=int)
        if len(gid) and len(pid):
            sim = iou_matrix(gbox, pbox)
            score = CONTINUITY_BONUS * (pid[None, :] == prev_pair[gid][:, None]) + sim
            score[sim < iou_threshold - EPS] = 0.0
            rows, cols = linear_sum_assignment(-score)
            for r, c in zip(rows, cols):
                if score[r, c] > EPS:
                    matched.append((r, c, float(sim[r, c])))
                    new_prev[gid[r]] = pid[c]
        prev_pair = new_prev
        mg = {r for r, _, _ in matched}
        mp = {c for _, c, _ in matched}
        out.append(FrameMatch(
            frame=f,
            matches=[(g.ids[gid[r]], p.ids[pid[c]], s) for r, c, s in matched],
            fn_ids=[g.ids[gid[r]] for r in range(len(gid)) if r not in mg],
            fp_ids=[p.ids[pid[c]] for c in range(len(pid)) if c not in mp],
        ))
    return out


def clear_metrics(stream: Sequence[FrameMatch]) -> dict:
    """MOTA, MOTP and IDSW plus the raw counts from a :func:`match_frames` stream."""
    tp = fp = fn = idsw = 0
    motp_sum = 0.0
    last_pred: dict[int, int] = {}
    for fm in stream:
        tp += len(fm.matches)
        fn += len(fm.fn_ids)
        fp += len(fm.fp_ids)
        for gid, pid, s in fm.matches:
            motp_sum += s
            if gid in last_pred and last_pred[gid] != pid:
                idsw += 1
            last_pred[gid] = pid
    gt = tp + fn
    return {
        "tp": tp, "fp": fp, "fn": fn, "gt": gt, "idsw": idsw, "motp_sum": motp_sum,
        "mota": (1.0 - (fn + fp + idsw) / gt) if gt else math.nan,
        "motp": motp_sum / tp if tp else 0.0,
    }


# ---------------------------------------------------------------- identity

def id_metrics(gt: FrameBoxes, pred: FrameBoxes, iou_threshold: float = 0.5,
               n_frames: Optional[int] = None) -> dict:
    """Global trajectory-level matching maximising IDTP."""
    frames = _frames(gt, pred, n_frames)
    g = _Indexed(gt, frames)
    p = _Indexed(pred, frames)
    overlap = np.zeros((len(g), len(p)))
    n_gt = sum(len(x) for x in g.per_frame_ids)
    n_pr = sum(len(x) for x in p.per_frame_ids)
    for fi in range(len(frames)):
        gid, pid = g.per_frame_ids[fi], p.per_frame_ids[fi]
        if len(gid) and len(pid):
            sim = iou_matrix(g.per_frame_boxes[fi], p.per_frame_boxes[fi])
            hit = sim >= iou_threshold - EPS
            overlap[np.ix_(gid, pid)] += hit
    idtp = 0
    if overlap.size:
        rows, cols = linear_sum_assignment(overlap, maximize=True)
        idtp = int(round(overlap[rows, cols].sum()))
    idfn = n_gt - idtp
    idfp = n_pr - idtp
    return {
        "idtp": idtp, "idfp": idfp, "idfn": idfn,
        "idp": idtp / (idtp + idfp) if idtp + idfp else 0.0,
        "idr": idtp / (idtp + idfn) if idtp + idfn else 0.0,
        "idf1": 2 * idtp / (2 * idtp + idfp + idfn) if idtp + idfp + idfn else 0.0,
    }


# ---------------------------------------------------------------- HOTA

def hota(gt: FrameBoxes, pred: FrameBoxes, n_frames: Optional[int] = None) -> list[AlphaRow]:
    """Per-alpha HOTA rows.

    Detections are matched per frame with a Hungarian assignment maximising
    IoU weighted by the global alignment score of the two identities, so pairs
    that agree over the whole sequence are preferred.
    """
    frames = _frames(gt, pred, n_frames)
    g = _Indexed(gt, frames)
    p = _Indexed(pred, frames)
    ng, npr = len(g), len(p)

    sims = []
    potential = np.zeros((ng, npr))
    gt_count = np.zeros(ng)
    pr_count = np.zeros(npr)
    for fi in range(len(frames)):
        gid, pid = g.per_frame_ids[fi], p.per_frame_ids[fi]
        gt_count[gid] += 1
        pr_count[pid] += 1
        sim = iou_matrix(g.per_frame_boxes[fi], p.per_frame_boxes[fi])
        sims.append(sim)
        if len(gid) and len(pid):
            denom = sim.sum(axis=0)[None, :] + sim.sum(axis=1)[:, None] - sim
            sim_iou = np.where(denom > EPS, sim / np.where(denom > EPS, denom, 1.0), 0.0)
            potential[np.ix_(gid, pid)] += sim_iou
    align_denom = gt_count[:, None] + pr_count[None, :] - potential
    global_align = np.where(align_denom > EPS, potential / np.where(align_denom > EPS, align_denom, 1.0), 0.0)

    na = len(ALPHAS)
    tp = np.zeros(na, dtype=int)
    fn = np.zeros(na, dtype=int)
    fp = np.zeros(na, dtype=int)
    loc = np.zeros(na)
    match_counts = np.zeros((na, ng, npr))
    for fi in range(len(frames)):
        gid, pid = g.per_frame_ids[fi], p.per_frame_ids[fi]
        if len(gid) == 0 or len(pid) == 0:
            fn += len(gid)
            fp += len(pid)
            continue
        sim = sims[fi]
        score = global_align[np.ix_(gid, pid)] * sim
        rows, cols = linear_sum_assignment(-score)
        ms = sim[rows, cols]
        for ai, alpha in enumerate(ALPHAS):
            ok = ms >= alpha - EPS
            r, c = rows[ok], cols[ok]
            n_ok = int(ok.sum())
            tp[ai] += n_ok
            fn[ai] += len(gid) - n_ok
            fp[ai] += len(pid) - n_ok
            loc[ai] += float(ms[ok].sum())
            match_counts[ai][gid[r], pid[c]] += 1

    out = []
    for ai, alpha in enumerate(ALPHAS):
        mc = match_counts[ai]
        denom = gt_count[:, None] + pr_count[None, :] - mc
        ass_iou = np.where(denom > 0, mc / np.where(denom > 0, denom, 1.0), 0.0)
        ass_sum = float((mc * ass_iou).sum())
        out.append(AlphaRow(alpha, int(tp[ai]), int(fn[ai]), int(fp[ai]), ass_sum, float(loc[ai])))
    return out


# ---------------------------------------------------------------- entry point

def evaluate(gt: FrameBoxes, pred: FrameBoxes, n_frames: Optional[int] = None,
             iou_threshold: float = 0.5) -> MetricsReport:
    stream = match_frames(gt, pred, iou_threshold, n_frames)
    c = clear_metrics(stream)
    i = id_metrics(gt, pred, iou_threshold, n_frames)
    frames = _frames(gt, pred, n_frames)
    return MetricsReport(
        tp=c["tp"], fp=c["fp"], fn=c["fn"], gt=c["gt"], idsw=c["idsw"], motp_sum=c["motp_sum"],
        idtp=i["idtp"], idfp=i["idfp"], idfn=i["idfn"],
        per_alpha=hota(gt, pred, n_frames),
        frames=len(frames),
    )


def gt_rows(gt_objects: Mapping[int, Sequence]) -> dict[int, list[tuple[int, BoundingBox]]]:
    """Convert ``{frame: [GTObject, ...]}`` into evaluation rows."""
    return {f: [(o.id, o.box) for o in objs] for f, objs in gt_objects.items()}


COLUMNS = ("MOTA", "MOTP", "IDF1", "IDP", "IDR", "IDSW", "HOTA", "DetA", "AssA", "LocA",
           "FramesSkipped", "SkipPct")


def format_table(named: Sequence[tuple[str, MetricsReport]]) -> str:
    """Human-readable table with MOTChallenge-style columns."""
    head = (f"{'Sequence':<22}{'MOTA':>8}{'MOTP':>8}{'IDF1':>8}{'IDSW':>6}"
            f"{'DetA':>8}{'AssA':>8}{'LocA':>8}{'HOTA':>8}  #Frames Skipped : %")
    lines = [head, "-" * len(head)]
    for name, r in named:
        lines.append(
            f"{name:<22}{100 * r.mota:>8.2f}{100 * r.motp:>8.3f}{100 * r.idf1:>7.1f}%{r.idsw:>6d}"
            f"{100 * r.deta:>8.3f}{100 * r.assa:>8.3f}{100 * r.loca:>8.3f}{100 * r.hota:>8.3f}"
            f"  {r.frames_skipped} : {r.skip_pct:.1f}%"
        )
    return "\n".join(lines)


def dumps(named: Sequence[tuple[str, MetricsReport]]) -> str:
    return json.dumps({n: r.to_json() for n, r in named}, indent=2, sort_keys=True)


def csv_lines(named: Sequence[tuple[str, MetricsReport]]) -> str:
    out = ["Sequence," + ",".join(COLUMNS) + ",MOTP_dist"]
    for name, r in named:
        s = r.summary()
        vals = [f"{s[c]:.6f}" if isinstance(s[c], float) else str(s[c]) for c in COLUMNS]
        out.append(name + "," + ",".join(vals) + f",{r.motp_distance:.6f}")
    return "\n".join(out) + "\n"
