"""How often context-aware skipping fires as the frame rate changes.

Objects move at a fixed speed in pixels per second, so per-frame motion is
speed / fps and the forced-detection cadence follows the fps. Lower frame rates
mean larger changes between frames, fewer skips and a shorter cadence.
"""
import argparse

from skiptrack import metrics
from skiptrack.scheduler import SkipPolicy, default_forced_cadence, run_sequence
from skiptrack.similarity import SimilarityConfig
from skiptrack.synthetic import SceneConfig, make_scene, oracle_source


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fps", default="7,10,14,25,30")
    ap.add_argument("--speed", default="25:90", help="lo:hi object speed in px/second")
    ap.add_argument("--seconds", type=float, default=6.0)
    ap.add_argument("--seeds", type=int, default=8)
    ap.add_argument("--ncc-threshold", type=float, default=0.75)
    args = ap.parse_args()
    lo, hi = (float(v) for v in args.speed.split(":"))

    print(f"{'fps':>6}{'k':>4}{'frames':>8}{'skipped':>9}{'skip%':>7}{'MOTA':>8}{'MOTA noskip':>13}")
    for fps in (float(v) for v in args.fps.split(",")):
        cfg = SceneConfig(n_frames=max(2, round(args.seconds * fps)), fps=fps, speed_range=(lo / fps, hi / fps),
                          bounce=False, late_entries=2)
        policy = SkipPolicy.context_aware(SimilarityConfig(ncc_threshold=args.ncc_threshold))
        ca, base = [], []
        for s in range(args.seeds):
            bundle = make_scene(SceneConfig(**{**cfg.__dict__, "seed": s}), name=f"FPS{fps:g}-{s}")
            gt = metrics.gt_rows(bundle.evaluation_gt())
            for pol, bucket in ((policy, ca), (SkipPolicy.no_skip(), base)):
                run = run_sequence(bundle, pol, source=oracle_source(bundle, 1.0, 0.05, 0.0, s))
                r = metrics.evaluate(gt, run.rows, bundle.length)
                r.frames_skipped = run.frames_skipped
                bucket.append(r)
        c, b = metrics.combine(ca), metrics.combine(base)
        print(f"{fps:6g}{default_forced_cadence(fps):4d}{c.frames:8d}{c.frames_skipped:9d}{c.skip_pct:7.1f}"
              f"{c.mota:8.4f}{b.mota:13.4f}")


if __name__ == "__main__":
    main()
