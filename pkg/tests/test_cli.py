import csv
import json
import shutil

import pytest

from skiptrack.cli import main, parse_grid
from skiptrack.config import RunConfig
from skiptrack.errors import ConfigError


@pytest.fixture
def data(tmp_path, fixtures_dir):
    dst = tmp_path / "data"
    shutil.copytree(fixtures_dir / "sequences", dst)
    return dst


def run(*argv):
    return main([str(a) for a in argv])


def test_track_noskip_matches_golden(data, tmp_path, fixtures_dir):
    out = tmp_path / "run"
    assert run("track", "--data", data, "--policy", "noskip", "--out", out) == 0
    for seq in ("SYN-25FPS", "SYN-7FPS", "SYN-STATIC"):
        assert (out / f"{seq}.txt").read_text() == (fixtures_dir / "golden" / f"{seq}.txt").read_text()
        assert (out / "decisions" / f"{seq}.csv").is_file()
    assert (out / "config.json").is_file() and (out / "cost_ledger.csv").is_file()
    assert RunConfig.load(out / "config.json").policy == "noskip"


def test_track_is_deterministic(data, tmp_path):
    args = ["track", "--data", data, "--policy", "context-aware", "--measure", "ncc", "--ncc-threshold", "0.75",
            "--k", "5", "--det-source", "oracle", "--oracle-sigma", "1", "--oracle-drop", "0.1",
            "--oracle-fp", "0.2", "--seed", "3"]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b", "--jobs", "2") == 0
    for f in sorted((tmp_path / "a").rglob("*")):
        if f.is_file() and f.name != "config.json":
            assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()


def test_eval_perfect_and_pooled(data, tmp_path, capsys):
    out = tmp_path / "run"
    assert run("track", "--data", data, "--policy", "noskip", "--det-source", "oracle", "--out", out) == 0
    capsys.readouterr()
    assert run("eval", "--results", out) == 0
    table = capsys.readouterr().out
    assert "#Frames Skipped : %" in table and "COMBINED" in table
    rows = list(csv.DictReader((out / "eval" / "metrics.csv").open()))
    assert [r["Sequence"] for r in rows] == ["SYN-25FPS", "SYN-7FPS", "SYN-STATIC", "COMBINED"]
    for r in rows:
        for col in ("MOTA", "IDF1", "HOTA", "DetA", "AssA", "LocA", "MOTP"):
            assert float(r[col]) == pytest.approx(1.0, abs=1e-6), (r["Sequence"], col)
        assert r["IDSW"] == "0"
    js = json.loads((out / "eval" / "metrics.json").read_text())
    assert js["COMBINED"]["tp"] == sum(js[s]["tp"] for s in ("SYN-25FPS", "SYN-7FPS", "SYN-STATIC"))


def test_eval_aggregate_pools_counts(data, tmp_path):
    out = tmp_path / "run"
    run("track", "--data", data, "--policy", "periodic", "--omega", "3", "--det-source", "oracle",
        "--oracle-sigma", "2", "--oracle-drop", "0.2", "--out", out)
    assert run("eval", "--results", out) == 0
    js = json.loads((out / "eval" / "metrics.json").read_text())
    seqs = [k for k in js if k != "COMBINED"]
    fn = sum(js[s]["fn"] for s in seqs)
    fp = sum(js[s]["fp"] for s in seqs)
    idsw = sum(js[s]["idsw"] for s in seqs)
    gt = sum(js[s]["gt"] for s in seqs)
    assert js["COMBINED"]["summary"]["MOTA"] == pytest.approx(1 - (fn + fp + idsw) / gt)
    skipped = sum(js[s]["frames_skipped"] for s in seqs)
    assert js["COMBINED"]["frames_skipped"] == skipped > 0


def test_eval_needs_only_run_dir_and_gt(data, tmp_path):
    out = tmp_path / "run"
    run("track", "--data", data, "--policy", "alternate", "--out", out)
    for seq in data.iterdir():
        shutil.rmtree(seq / "img1")
        shutil.rmtree(seq / "det")
    assert run("eval", "--results", out) == 0


def test_eval_missing_gt_fails(data, tmp_path, capsys):
    out = tmp_path / "run"
    run("track", "--data", data, "--seqs", "SYN-7FPS", "--out", out)
    (data / "SYN-7FPS" / "gt" / "gt.txt").unlink()
    assert run("eval", "--results", out) != 0
    assert "error" in capsys.readouterr().err


def test_sweep_patterns_four_rows(data, tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--data", data, "--seqs", "SYN-25FPS", "--policy", "periodic",
               "--grid", "pattern=none,skip-1-of-3,skip-1-of-2,skip-2-of-3", "--sweep-out", out) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["value"] for r in rows] == ["none", "skip-1-of-3", "skip-1-of-2", "skip-2-of-3"]
    skip = [float(r["SkipPct"]) for r in rows]
    assert skip == sorted(skip) and skip[0] == 0.0
    assert rows[0]["fps"] == "25" and "speedup" in rows[0]


def test_sweep_ncc_threshold_monotone(data, tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--data", data, "--policy", "context-aware", "--k", "6", "--det-source", "oracle",
               "--grid", "ncc_threshold=0.6,0.75,0.9", "--sweep-out", out) == 0
    rows = list(csv.DictReader(out.open()))
    for seq in {r["sequence"] for r in rows}:
        pct = [float(r["SkipPct"]) for r in rows if r["sequence"] == seq]
        assert all(b <= a for a, b in zip(pct, pct[1:]))


def test_sweep_empty_grid_is_error(data, tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--data", data, "--sweep-out", out) != 0
    assert not out.exists()
    with pytest.raises(ConfigError):
        parse_grid(["omega="])
    with pytest.raises(ConfigError):
        parse_grid(["omega"])
    assert parse_grid(["ncc-threshold=0.5,0.7"]) == [("ncc_threshold", ["0.5", "0.7"])]


def test_report_emits_plot_data(data, tmp_path):
    out = tmp_path / "run"
    run("track", "--data", data, "--policy", "context-aware", "--det-source", "oracle", "--out", out)
    run("eval", "--results", out)
    assert run("report", "--results", out) == 0
    pts = json.loads((out / "report" / "skip_vs_fps.json").read_text())
    assert {p["sequence"] for p in pts} == {"SYN-25FPS", "SYN-7FPS", "SYN-STATIC"}
    assert {p["fps"] for p in pts} == {25.0, 7.0, 14.0}
    assert all("MOTA" in p and 0 <= p["skip_pct"] <= 100 for p in pts)


def test_config_file_and_overrides(data, tmp_path):
    cfg = RunConfig(data=str(data), policy="periodic", omega=3, out=str(tmp_path / "r1"))
    cfg.save(tmp_path / "cfg.json")
    assert run("track", "--config", tmp_path / "cfg.json", "--seqs", "SYN-7FPS") == 0
    saved = RunConfig.load(tmp_path / "r1" / "config.json")
    assert saved.omega == 3 and saved.seqs == ["SYN-7FPS"]
    log = (tmp_path / "r1" / "decisions" / "SYN-7FPS.csv").read_text().splitlines()[1:]
    assert sum(",Detect," in ln for ln in log) == 7  # ceil(20 / 3)


def test_bad_inputs_exit_nonzero(tmp_path, data):
    assert run("track", "--data", tmp_path / "nowhere", "--out", tmp_path / "x") != 0
    assert run("track", "--data", data, "--policy", "periodic", "--pattern", "SD", "--out", tmp_path / "y") != 0
    bad = tmp_path / "bad.json"
    bad.write_text('{"policy": "noskip", "colour": "red"}')
    assert run("track", "--config", bad) != 0
    with pytest.raises(SystemExit):
        run("track", "--policy", "sometimes")


def test_run_config_round_trip(tmp_path):
    cfg = RunConfig(policy="context-aware", measure="eigen", eigen_threshold=60, k=4, seqs=["A", "B"])
    cfg.save(tmp_path / "c.json")
    assert RunConfig.load(tmp_path / "c.json") == cfg
    assert cfg.with_value("k", "none").k is None
    assert cfg.with_value("ncc_threshold", "0.9").ncc_threshold == 0.9
    assert cfg.with_value("seqs", "X,Y").seqs == ["X", "Y"]
    with pytest.raises(ConfigError):
        cfg.with_value("omega", "two")
    with pytest.raises(ConfigError):
        cfg.with_value("nonsense", "1")


def test_synth_command(tmp_path):
    assert run("synth", "--out", tmp_path / "s", "--n-seqs", "2", "--frames", "5", "--fps", "10,30") == 0
    assert (tmp_path / "s" / "SYN-02" / "seqinfo.ini").read_text().count("frameRate=30") == 1
