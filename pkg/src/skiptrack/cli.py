"""Command-line entry points: track, eval, sweep, report, synth."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import metrics, sequence_io
from .config import RunConfig
from .cost import ledger_from_actions, write_ledgers
from .errors import ConfigError, MissingGroundTruth, TrackingError
from .scheduler import (
    NAMED_PATTERNS, SequenceRun, read_decision_log, run_sequence, write_decision_log,
)
from .sequence_io import DetectionSource, discover_sequences, load_sequence

log = logging.getLogger("skiptrack")

CONFIG_NAME = "config.json"
LEDGER_NAME = "cost_ledger.csv"
DECISIONS_DIR = "decisions"


# ---------------------------------------------------------------- running

def run_one(cfg: RunConfig, seq_dir: str) -> SequenceRun:
    policy = cfg.skip_policy()
    bundle = load_sequence(seq_dir, cfg.confidence_floor, check_frames=policy.kind.value == "context-aware")
    if cfg.det_source == "oracle":
        source = DetectionSource.oracle(bundle, cfg.oracle_params())
    else:
        source = DetectionSource.file_backed(bundle)
    log.info("%s: %s over %d frames", bundle.name, policy.describe(), bundle.length)
    return run_sequence(bundle, policy, cfg.tracker_config(), source, cfg.cost(), cfg.timing)


def run_all(cfg: RunConfig) -> list[tuple[str, SequenceRun]]:
    dirs = discover_sequences(cfg.data, cfg.seqs)
    if cfg.jobs > 1 and len(dirs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            runs = list(pool.map(run_one, [cfg] * len(dirs), [str(d) for d in dirs]))
    else:
        runs = [run_one(cfg, str(d)) for d in dirs]
    return [(d.name, r) for d, r in zip(dirs, runs)]


def save_run(cfg: RunConfig, runs: Sequence[tuple[str, SequenceRun]]) -> Path:
    out = Path(cfg.out)
    (out / DECISIONS_DIR).mkdir(parents=True, exist_ok=True)
    cfg.save(out / CONFIG_NAME)
    ledgers = {}
    for seq, run in runs:
        sequence_io.write_results(out / f"{seq}.txt", run.rows)
        write_decision_log(out / DECISIONS_DIR / f"{seq}.csv", run.decisions)
        ledgers[seq] = run.ledger
    write_ledgers(out / LEDGER_NAME, ledgers)
    return out


def evaluate_run(seq_dir: Path, rows, n_skipped: int, n_frames: int,
                 iou_threshold: float = 0.5) -> metrics.MetricsReport:
    bundle = load_sequence(seq_dir, check_frames=False)
    if bundle.ground_truth is None:
        raise MissingGroundTruth(f"{seq_dir}: gt/gt.txt not found")
    report = metrics.evaluate(metrics.gt_rows(bundle.evaluation_gt()), rows, bundle.length, iou_threshold)
    report.frames = n_frames
    report.frames_skipped = n_skipped
    return report


# ---------------------------------------------------------------- commands

def cmd_track(args) -> int:
    cfg = build_config(args)
    runs = run_all(cfg)
    out = save_run(cfg, runs)
    for seq, run in runs:
        print(f"{seq}: {len(run.detector_calls)} detections, {run.frames_skipped} skipped "
              f"({run.skip_pct:.1f}%), speedup {run.ledger.speedup_vs_noskip:.3f}")
    print(f"results written to {out}")
    return 0


def cmd_eval(args) -> int:
    res = Path(args.results)
    cfg_path = res / CONFIG_NAME
    cfg = RunConfig.load(cfg_path) if cfg_path.is_file() else RunConfig()
    data = args.data or cfg.data
    results = sorted(p for p in res.glob("*.txt"))
    if not results:
        raise TrackingError(f"no result files in {res}")
    dirs = {d.name: d for d in discover_sequences(data)}
    named = []
    for r in results:
        seq = r.stem
        if seq not in dirs:
            raise MissingGroundTruth(f"sequence {seq} not found under {data}")
        dec_path = res / DECISIONS_DIR / f"{seq}.csv"
        if dec_path.is_file():
            decisions = read_decision_log(dec_path)
            n_frames, n_skipped = len(decisions), sum(1 for d in decisions if not d.detected)
        else:
            n_frames, n_skipped = 0, 0
        rows = sequence_io.read_results(r)
        named.append((seq, evaluate_run(dirs[seq], rows, n_skipped, n_frames, args.iou_threshold)))
    named.append(("COMBINED", metrics.combine(rep for _, rep in named)))
    out = Path(args.out) if args.out else res / "eval"
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(metrics.csv_lines(named))
    (out / "metrics.json").write_text(metrics.dumps(named) + "\n")
    print(metrics.format_table(named))
    return 0


SWEEP_COLUMNS = ("sequence", "fps", "param", "value", "policy") + metrics.COLUMNS + ("speedup",)


def cmd_sweep(args) -> int:
    base = build_config(args)
    grid = parse_grid(args.grid)
    rows = []
    for name, values in grid:
        for v in values:
            cfg = base.with_value(name, v).validate()
            for seq, run in run_all(cfg):
                seq_dir = next(d for d in discover_sequences(cfg.data, [seq]))
                rep = evaluate_run(seq_dir, run.rows, run.frames_skipped, len(run.decisions))
                bundle_fps = sequence_io.parse_seqinfo(seq_dir / "seqinfo.ini")["frameRate"]
                s = rep.summary()
                rows.append([seq, f"{bundle_fps:g}", name, str(v), cfg.skip_policy().describe()]
                            + [_fmt(s[c]) for c in metrics.COLUMNS]
                            + [f"{run.ledger.speedup_vs_noskip:.6f}"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    w.writerows(rows)
    out = Path(args.sweep_out) if args.sweep_out else Path(base.out) / "sweep.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(buf.getvalue())
    print(buf.getvalue(), end="")
    return 0


def cmd_report(args) -> int:
    """Plot-ready data: per-sequence skip percentage against FPS, plus summary metrics."""
    res = Path(args.results)
    cfg = RunConfig.load(res / CONFIG_NAME)
    data = args.data or cfg.data
    dirs = {d.name: d for d in discover_sequences(data)}
    metrics_path = res / "eval" / "metrics.json"
    evald = json.loads(metrics_path.read_text()) if metrics_path.is_file() else {}
    points = []
    for dec in sorted((res / DECISIONS_DIR).glob("*.csv")):
        seq = dec.stem
        decisions = read_decision_log(dec)
        n = len(decisions)
        skipped = sum(1 for d in decisions if not d.detected)
        fps = sequence_io.parse_seqinfo(dirs[seq] / "seqinfo.ini")["frameRate"] if seq in dirs else float("nan")
        ledger = ledger_from_actions((d.detected for d in decisions), cfg.cost())
        p = {"sequence": seq, "fps": fps, "frames": n, "frames_skipped": skipped,
             "skip_pct": 100.0 * skipped / n if n else 0.0, "speedup": ledger.speedup_vs_noskip}
        if seq in evald:
            p.update({k: evald[seq]["summary"][k] for k in ("MOTA", "IDF1", "HOTA")})
        points.append(p)
    if not points:
        raise TrackingError(f"no decision logs under {res / DECISIONS_DIR}")
    out = Path(args.out) if args.out else res / "report"
    out.mkdir(parents=True, exist_ok=True)
    keys = list(points[0].keys())
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for p in points:
        w.writerow({k: _fmt(v) for k, v in p.items()})
    (out / "skip_vs_fps.csv").write_text(buf.getvalue())
    (out / "skip_vs_fps.json").write_text(json.dumps(points, indent=2, sort_keys=True) + "\n")
    print(buf.getvalue(), end="")
    return 0


def cmd_synth(args) -> int:
    from .synthetic import SceneConfig, make_scene, write_sequence
    from .sequence_io import OracleParams

    root = Path(args.out)
    fps_values = [float(x) for x in args.fps.split(",")]
    for i in range(args.n_seqs):
        fps = fps_values[i % len(fps_values)]
        cfg = SceneConfig(n_frames=args.frames, fps=fps, n_objects=args.objects, late_entries=args.late,
                          speed_range=(args.min_speed, args.max_speed), bounce=not args.no_bounce,
                          seed=args.seed + i)
        name = f"SYN-{i + 1:02d}"
        bundle = make_scene(cfg, name=name)
        write_sequence(bundle, root / name,
                       OracleParams(args.oracle_sigma, args.oracle_drop, args.oracle_fp, args.seed))
        print(f"wrote {root / name}")
    return 0


# ---------------------------------------------------------------- arguments

def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def parse_grid(items: Optional[Sequence[str]]) -> list[tuple[str, list[str]]]:
    if not items:
        raise ConfigError("empty grid: pass at least one --grid name=v1,v2")
    grid = []
    for item in items:
        if "=" not in item:
            raise ConfigError(f"grid entry {item!r} must look like name=v1,v2")
        name, vals = item.split("=", 1)
        values = [v for v in vals.split(",") if v.strip()]
        if not values:
            raise ConfigError(f"grid entry {item!r} has no values")
        grid.append((name.strip().replace("-", "_"), values))
    return grid


# flag name -> RunConfig field
_RUN_FLAGS = {
    "data": "data", "seqs": "seqs", "policy": "policy", "omega": "omega", "pattern": "pattern",
    "measure": "measure", "ncc_threshold": "ncc_threshold", "hog_threshold": "hog_threshold",
    "eigen_threshold": "eigen_threshold", "eigen_agg": "eigen_agg", "eigen_scope": "eigen_scope",
    "k": "k", "skip_box_source": "skip_box_source", "det_source": "det_source",
    "oracle_sigma": "oracle_sigma", "oracle_drop": "oracle_drop", "oracle_fp": "oracle_fp",
    "confidence_floor": "confidence_floor", "iou_gate": "iou_gate", "max_lost_frames": "max_lost_frames",
    "min_confidence": "min_confidence", "confirm_frames": "tentative_confirm_frames",
    "cost_profile": "cost_profile", "timing": "timing", "out": "out", "seed": "seed", "jobs": "jobs",
}


def build_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    for flag, fname in _RUN_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            if flag == "seqs":
                v = [s for s in v.split(",") if s]
            cfg = cfg.with_value(fname, v)
    return cfg.validate()


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    # defaults are None so a --config file is only overridden by explicit flags
    p.add_argument("--config", help="JSON run config; explicit flags override it")
    p.add_argument("--data", help="dataset root (directory of MOTChallenge sequences)")
    p.add_argument("--seqs", help="comma-separated sequence names")
    p.add_argument("--policy", choices=["noskip", "periodic", "alternate", "context-aware"])
    p.add_argument("--pattern", help=f"periodic D/S pattern or one of {sorted(NAMED_PATTERNS)}")
    p.add_argument("--omega", type=int, help="periodic: detect once every omega frames")
    p.add_argument("--measure", choices=["ncc", "hog", "eigen"])
    p.add_argument("--ncc-threshold", type=float)
    p.add_argument("--hog-threshold", type=float)
    p.add_argument("--eigen-threshold", type=float)
    p.add_argument("--eigen-agg", choices=["mean", "sum"])
    p.add_argument("--eigen-scope", choices=["crops", "whole"])
    p.add_argument("--k", type=int, help="forced detection cadence (default: from FPS)")
    p.add_argument("--skip-box-source", choices=["reuse", "kalman"])
    p.add_argument("--det-source", choices=["file", "oracle"])
    p.add_argument("--oracle-sigma", type=float)
    p.add_argument("--oracle-drop", type=float)
    p.add_argument("--oracle-fp", type=float)
    p.add_argument("--confidence-floor", type=float)
    p.add_argument("--iou-gate", type=float)
    p.add_argument("--max-lost-frames", type=int)
    p.add_argument("--min-confidence", type=float)
    p.add_argument("--confirm-frames", type=int)
    p.add_argument("--cost-profile", help="mot17 | mot15 | JSON file | t_det,t_dec,t_est")
    p.add_argument("--timing", choices=["simulated", "wallclock"])
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skiptrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="run a skipping policy over sequences")
    _add_run_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="evaluate a track output directory against ground truth")
    p.add_argument("--results", required=True)
    p.add_argument("--data", help="dataset root (default: from the archived config)")
    p.add_argument("--iou-threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid over one or more parameters")
    _add_run_flags(p)
    p.add_argument("--grid", action="append", help="name=v1,v2,... (repeatable)")
    p.add_argument("--sweep-out", help="CSV path (default: <out>/sweep.csv)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="plot-ready skip%% vs FPS data for a run directory")
    p.add_argument("--results", required=True)
    p.add_argument("--data")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="write synthetic MOTChallenge sequences")
    p.add_argument("--out", required=True)
    p.add_argument("--n-seqs", type=int, default=2)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--fps", default="25", help="comma-separated, cycled over sequences")
    p.add_argument("--objects", type=int, default=4)
    p.add_argument("--late", type=int, default=0)
    p.add_argument("--min-speed", type=float, default=1.0)
    p.add_argument("--max-speed", type=float, default=4.0)
    p.add_argument("--no-bounce", action="store_true")
    p.add_argument("--oracle-sigma", type=float, default=0.0)
    p.add_argument("--oracle-drop", type=float, default=0.0)
    p.add_argument("--oracle-fp", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("EMO_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TrackingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
