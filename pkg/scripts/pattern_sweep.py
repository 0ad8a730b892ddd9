"""Accuracy and simulated latency as the fraction of skipped frames grows.

Runs the fixed detect/skip patterns (none, skip-1-of-3, skip-1-of-2,
skip-2-of-3) with reused boxes on synthetic scenes and reports pooled metrics
next to the cost-model time ratio for both reference timing profiles.
"""
import argparse

from skiptrack import metrics
from skiptrack.cost import CostProfile, ledger_from_actions, speedup
from skiptrack.scheduler import NAMED_PATTERNS, SkipPolicy, run_sequence
from skiptrack.synthetic import SceneConfig, make_scene, oracle_source


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--frames", type=int, default=150)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--drop", type=float, default=0.05)
    ap.add_argument("--fp", type=float, default=0.1)
    args = ap.parse_args()

    bundles = [make_scene(SceneConfig(n_frames=args.frames, late_entries=2, seed=s), name=f"SYN-{s}")
               for s in range(args.seeds)]
    profiles = {"mot17": CostProfile.mot17(), "mot15": CostProfile.mot15()}
    print(f"{'pattern':<14}{'skip%':>7}{'MOTA':>8}{'IDF1':>8}{'HOTA':>8}{'IDSW':>6}"
          + "".join(f"{'t/' + n:>9}" for n in profiles))
    for name in NAMED_PATTERNS:
        policy = SkipPolicy.periodic(pattern=name, skip_box_source="reuse")
        reports, flags = [], []
        for s, bundle in enumerate(bundles):
            run = run_sequence(bundle, policy, source=oracle_source(bundle, args.sigma, args.drop, args.fp, s))
            r = metrics.evaluate(metrics.gt_rows(bundle.evaluation_gt()), run.rows, bundle.length)
            r.frames_skipped = run.frames_skipped
            reports.append(r)
            flags += [d.detected for d in run.decisions]
        r = metrics.combine(reports)
        ratios = "".join(f"{speedup(ledger_from_actions(flags, p), p):9.3f}" for p in profiles.values())
        print(f"{name:<14}{r.skip_pct:7.1f}{r.mota:8.4f}{r.idf1:8.4f}{r.hota:8.4f}{r.idsw:6d}{ratios}")


if __name__ == "__main__":
    main()
