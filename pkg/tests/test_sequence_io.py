import numpy as np
import pytest
from hypothesis import given, strategies as st
from PIL import Image

from skiptrack.core import BoundingBox, GrayImage
from skiptrack.errors import DecodeError, MalformedLine, MissingFrameFile, MissingSeqInfo, NoGroundTruth
from skiptrack.sequence_io import (
    DetectionSource, GTObject, OracleParams, SequenceBundle, discover_sequences, format_results, load_frame,
    load_sequence, oracle_detections, parse_seqinfo, read_detections, read_ground_truth, read_results,
    save_frame, write_results, write_seqinfo,
)


def make_seq(root, n=3, fps=25, ext=".png", det_lines=None, gt_lines=None, names=None):
    (root / "img1").mkdir(parents=True)
    write_seqinfo(root / "seqinfo.ini", root.name, fps, n, 8, 6, im_ext=ext)
    for i, name in enumerate(names or [f"{i:06d}{ext}" for i in range(1, n + 1)]):
        Image.fromarray(np.full((6, 8), 10 * i, np.uint8)).save(root / "img1" / name)
    if det_lines is not None:
        (root / "det").mkdir()
        (root / "det" / "det.txt").write_text("\n".join(det_lines) + "\n")
    if gt_lines is not None:
        (root / "gt").mkdir()
        (root / "gt" / "gt.txt").write_text("\n".join(gt_lines) + "\n")
    return root


# ---------------------------------------------------------------- seqinfo

@pytest.mark.parametrize("name,fps,length,size", [
    ("MOT17-02-FRCNN", 30.0, 600, (1920, 1080)),
    ("TUD-Stadtmitte", 25.0, 179, (640, 480)),
    ("PETS09-S2L1", 7.0, 795, (768, 576)),
])
def test_published_seqinfo_grammar(fixtures_dir, name, fps, length, size):
    info = parse_seqinfo(fixtures_dir / "seqinfo" / f"{name}.ini")
    assert info["name"] == name
    assert info["frameRate"] == fps
    assert info["seqLength"] == length
    assert (info["imWidth"], info["imHeight"]) == size
    assert info["imDir"] == "img1" and info["imExt"] == ".jpg"


def test_seqinfo_errors(tmp_path):
    with pytest.raises(MissingSeqInfo):
        parse_seqinfo(tmp_path / "nope.ini")
    p = tmp_path / "s.ini"
    p.write_text("[Other]\nx=1\n")
    with pytest.raises(MissingSeqInfo):
        parse_seqinfo(p)
    p.write_text("[Sequence]\nname=x\nframeRate=abc\nseqLength=3\nimWidth=1\nimHeight=1\n")
    with pytest.raises(MissingSeqInfo):
        parse_seqinfo(p)


# ---------------------------------------------------------------- sequences

def test_load_three_frame_fixture(tmp_path):
    root = make_seq(tmp_path / "SEQ", det_lines=["1,-1,10,20,30,40,0.9,-1,-1,-1", "2,-1,1,2,3,4,0.2,-1,-1,-1"])
    b = load_sequence(root)
    assert b.fps == 25 and b.length == 3
    d, = b.detections_by_frame[1]
    assert d.box.as_tuple() == (10, 20, 30, 40) and d.confidence == 0.9 and d.frame_index == 1
    assert 2 not in b.detections_by_frame  # below the 0.4 floor
    assert b.ground_truth is None
    assert b.frame(2).data[0, 0] == 10


def test_frames_sorted_by_index_not_listing(tmp_path):
    names = ["3.png", "1.png", "10.png", "2.png"] + [f"{i}.png" for i in range(4, 10)]
    root = make_seq(tmp_path / "S", n=10, names=names)
    b = load_sequence(root)
    assert [p.name for p in b.frame_paths] == [f"{i}.png" for i in range(1, 11)]


def test_missing_frame(tmp_path):
    root = make_seq(tmp_path / "S", n=3)
    (root / "img1" / "000002.png").unlink()
    with pytest.raises(MissingFrameFile):
        load_sequence(root)


def test_malformed_line_number(tmp_path):
    lines = ["1,-1,10,20,30,40,0.9,-1,-1,-1", "", "2,-1,10,20,30,40,0.9,-1,-1,-1", "3,-1,10,20"]
    root = make_seq(tmp_path / "S", det_lines=lines)
    with pytest.raises(MalformedLine) as exc:
        load_sequence(root)
    assert exc.value.line_number == 4
    (root / "det" / "det.txt").write_text("1,-1,10,20,30,40,0.9\n1,-1,a,20,30,40,0.9\n")
    with pytest.raises(MalformedLine) as exc:
        read_detections(root / "det" / "det.txt")
    assert exc.value.line_number == 2


def test_ground_truth_layouts(tmp_path):
    p = tmp_path / "gt.txt"
    p.write_text("1,1,10,10,20,40,1,1,0.9\n1,2,10,10,20,40,1,2,0.9\n1,3,10,10,20,40,1,1,0.1\n1,4,1,1,5,5,0,1,1\n")
    gt = read_ground_truth(p)
    assert [g.evaluable for g in gt[1]] == [True, False, False, False]
    p.write_text("1,1,10,10,20,40,1,-1,-1,-1\n2,1,11,10,20,40\n")
    gt = read_ground_truth(p)
    assert gt[1][0].evaluable and gt[2][0].cls == 1 and gt[2][0].visibility == 1.0


def test_evaluation_gt_keys_every_frame():
    b = SequenceBundle("x", 10, 100, 100, 4, ground_truth={2: [GTObject(1, BoundingBox(0, 0, 5, 5), 1, 1.0)]})
    assert sorted(b.evaluation_gt()) == [1, 2, 3, 4]
    with pytest.raises(NoGroundTruth):
        SequenceBundle("x", 10, 100, 100, 4).evaluation_gt()


def test_discover(tmp_path):
    make_seq(tmp_path / "A")
    make_seq(tmp_path / "B")
    assert [p.name for p in discover_sequences(tmp_path)] == ["A", "B"]
    assert [p.name for p in discover_sequences(tmp_path, ["B"])] == ["B"]
    assert [p.name for p in discover_sequences(tmp_path / "A")] == ["A"]
    with pytest.raises(MissingSeqInfo):
        discover_sequences(tmp_path, ["C"])


# ---------------------------------------------------------------- results

boxes = st.builds(BoundingBox, st.floats(-500, 2000), st.floats(-500, 2000), st.floats(0, 500), st.floats(0, 500))


@given(st.dictionaries(st.integers(1, 50), st.lists(st.tuples(st.integers(1, 99), boxes), max_size=4,
                                                   unique_by=lambda r: r[0]), max_size=6))
def test_results_round_trip(tmp_path_factory, rows):
    p = tmp_path_factory.mktemp("r") / "res.txt"
    write_results(p, rows)
    back = read_results(p)
    nonempty = {f: r for f, r in rows.items() if r}
    assert sorted(back) == sorted(nonempty)
    for f, r in nonempty.items():
        for (i, b), (j, c) in zip(sorted(r, key=lambda x: x[0]), back[f]):
            assert i == j
            assert np.allclose(b.as_tuple(), c.as_tuple(), atol=0.005 + 1e-9, rtol=0)


def test_results_format_and_order():
    rows = {2: [(7, BoundingBox(1, 2, 3, 4)), (3, BoundingBox(1.005, 2.5, 3.25, 4))], 1: [], 5: []}
    text = format_results(rows)
    assert text == "2,3,1.00,2.50,3.25,4.00,1,-1,-1,-1\n2,7,1.00,2.00,3.00,4.00,1,-1,-1,-1\n"
    with pytest.raises(ValueError):
        format_results({1: [(0, BoundingBox(0, 0, 1, 1))]})


def test_results_write_is_idempotent(tmp_path):
    rows = {1: [(1, BoundingBox(1.234, 5.678, 9.1011, 12.1314))]}
    write_results(tmp_path / "a.txt", rows)
    write_results(tmp_path / "b.txt", read_results(tmp_path / "a.txt"))
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


# ---------------------------------------------------------------- images

def test_load_frame_rgb_luma(tmp_path):
    px = np.array([[[255, 0, 0], [0, 255, 0]], [[0, 0, 255], [200, 100, 50]]], np.uint8)
    Image.fromarray(px, "RGB").save(tmp_path / "f.png")
    g = load_frame(tmp_path / "f.png").data
    expect = np.array([[76.245, 149.685], [29.07, 0.299 * 200 + 0.587 * 100 + 0.114 * 50]])
    assert np.abs(g - expect).max() < 0.5


def test_load_frame_gray_exact(tmp_path):
    arr = np.arange(48, dtype=np.uint8).reshape(6, 8) * 5
    Image.fromarray(arr, "L").save(tmp_path / "g.png")
    assert np.array_equal(load_frame(tmp_path / "g.png").data, arr.astype(float))
    save_frame(tmp_path / "h.png", GrayImage(arr.astype(float)))
    assert np.array_equal(load_frame(tmp_path / "h.png").data, arr.astype(float))


def test_load_frame_corrupt(tmp_path):
    (tmp_path / "bad.jpg").write_bytes(b"\xff\xd8\xff\xe0 not really a jpeg")
    with pytest.raises(DecodeError):
        load_frame(tmp_path / "bad.jpg")
    with pytest.raises(MissingFrameFile):
        load_frame(tmp_path / "absent.png")


# ---------------------------------------------------------------- oracle

def _gt(n=5):
    return [GTObject(i + 1, BoundingBox(10 + 50 * i, 20, 30, 60), 1, 1.0) for i in range(n)]


def test_oracle_noiseless_equals_gt():
    dets = oracle_detections(_gt(), 3, OracleParams())
    assert [d.box for d in dets] == [g.box for g in _gt()]
    assert all(d.frame_index == 3 for d in dets)


def test_oracle_drop_all():
    assert oracle_detections(_gt(), 1, OracleParams(sigma=2, drop=1.0)) == []


def test_oracle_drop_rate():
    gt = _gt(10)
    kept = sum(len(oracle_detections(gt, f, OracleParams(2.0, 0.1, 0.0, 11))) for f in range(1, 101))
    assert abs(1 - kept / 1000 - 0.1) <= 0.02


def test_oracle_false_positive_rate():
    gt = _gt(10)
    extra = sum(len(oracle_detections(gt, f, OracleParams(0, 0, 0.3, 5), (640, 480))) - 10
                for f in range(1, 201))
    assert abs(extra / 2000 - 0.3) < 0.05


def test_oracle_deterministic_and_seeded():
    p = OracleParams(1.5, 0.2, 0.5, 42)
    a = oracle_detections(_gt(), 7, p)
    assert a == oracle_detections(_gt(), 7, p)
    assert a != oracle_detections(_gt(), 7, OracleParams(1.5, 0.2, 0.5, 43))


def test_oracle_follows_documented_draw_order():
    for frame, p in [(7, OracleParams(1.5, 0.2, 0.5, 42)), (1, OracleParams(0.0, 0.5, 1.0, 3)),
                     (99, OracleParams(4.0, 0.0, 2.0, 0))]:
        got = [d.box.as_tuple() for d in oracle_detections(_gt(), frame, p)]
        assert got == _reference_draws(_gt(), frame, p)


def _reference_draws(gt, frame, p, size=(1920, 1080)):
    """Re-derive the oracle's output from the documented draw order."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([p.seed, frame])))
    out = []
    for g in gt:
        u = rng.random()
        z = rng.standard_normal(4) * p.sigma
        if u >= p.drop:
            b = g.box
            out.append((b.left + z[0], b.top + z[1], max(1.0, b.width + z[2]), max(1.0, b.height + z[3])))
    n = rng.poisson(p.fp_rate * len(gt))
    for _ in range(n):
        w = rng.uniform(16.0, max(17.0, 0.1 * size[0]))
        x = rng.uniform(0.0, size[0] - w)
        y = rng.uniform(0.0, size[1] - 2 * w)
        out.append((x, y, w, 2 * w))
    return out


def test_oracle_needs_gt():
    with pytest.raises(NoGroundTruth):
        oracle_detections(None, 1, OracleParams())
    with pytest.raises(NoGroundTruth):
        DetectionSource.oracle(SequenceBundle("x", 10, 10, 10, 2), OracleParams())


def test_oracle_skips_non_evaluable():
    gt = _gt(2) + [GTObject(9, BoundingBox(0, 0, 5, 5), 2, 1.0), GTObject(10, BoundingBox(0, 0, 5, 5), 1, 0.1)]
    assert len(oracle_detections(gt, 1, OracleParams())) == 2


def test_detection_source_counts_calls():
    b = SequenceBundle("x", 10, 640, 480, 3, ground_truth={1: _gt(2), 3: _gt(1)})
    src = DetectionSource.oracle(b, OracleParams())
    assert len(src(1)) == 2 and src(2) == [] and len(src(3)) == 1
    assert src.calls == [1, 2, 3]
