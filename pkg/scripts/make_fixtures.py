"""Regenerate the small MOTChallenge-layout fixture sequences used by the test suite.

Every object is present from the first frame so that a noiseless detector under
the no-skip policy tracks perfectly. A golden no-skip result file is written
next to each sequence.
"""
import argparse
import shutil
from pathlib import Path

from skiptrack.scheduler import SkipPolicy, run_sequence
from skiptrack.sequence_io import OracleParams, load_sequence, write_results
from skiptrack.synthetic import SceneConfig, make_scene, write_sequence

FIXTURES = {
    "SYN-25FPS": SceneConfig(width=160, height=120, n_frames=24, fps=25, n_objects=3,
                             size_range=(12, 18), seed=101),
    "SYN-7FPS": SceneConfig(width=160, height=120, n_frames=20, fps=7, n_objects=2,
                            speed_range=(1.5, 3), size_range=(12, 18), seed=202),
    "SYN-STATIC": SceneConfig(width=128, height=96, n_frames=20, fps=14, n_objects=2,
                              speed_range=(0, 0), size_range=(12, 18), seed=303),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "sequences"))
    args = ap.parse_args()
    root = Path(args.out)
    if root.exists():
        shutil.rmtree(root)
    golden = root.parent / "golden"
    golden.mkdir(parents=True, exist_ok=True)
    for name, cfg in FIXTURES.items():
        bundle = make_scene(cfg, name=name)
        write_sequence(bundle, root / name, OracleParams())
        loaded = load_sequence(root / name, check_frames=False)
        run = run_sequence(loaded, SkipPolicy.no_skip())
        write_results(golden / f"{name}.txt", run.rows)
        print(f"{name}: {cfg.n_frames} frames -> {root / name}")


if __name__ == "__main__":
    main()
