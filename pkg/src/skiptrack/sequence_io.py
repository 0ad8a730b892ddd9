"""MOTChallenge sequence loading, result writing, frame decoding and detection sources."""
from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import BoundingBox, Detection, GrayImage, rgb_to_gray
from .errors import (
    DecodeError, MalformedLine, MissingDetections, MissingFrame, MissingFrameFile,
    MissingSeqInfo, NoGroundTruth,
)

PEDESTRIAN_CLASS = 1
MIN_VISIBILITY = 0.25
DEFAULT_CONFIDENCE_FLOOR = 0.4


@dataclass(frozen=True)
class GTObject:
    id: int
    box: BoundingBox
    cls: int = PEDESTRIAN_CLASS
    visibility: float = 1.0
    flag: int = 1

    @property
    def evaluable(self) -> bool:
        return self.flag != 0 and self.cls == PEDESTRIAN_CLASS and self.visibility >= MIN_VISIBILITY


@dataclass
class SequenceBundle:
    name: str
    fps: float
    width: int
    height: int
    length: int
    frame_paths: list[Path] = field(default_factory=list)
    detections_by_frame: dict[int, list[Detection]] = field(default_factory=dict)
    ground_truth: Optional[dict[int, list[GTObject]]] = None
    # in-memory frames (synthetic sequences); takes precedence over frame_paths
    frames: Optional[list[GrayImage]] = None
    root: Optional[Path] = None

    def __post_init__(self):
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        if self.length < 0:
            raise ValueError("negative sequence length")

    def frame(self, index: int) -> GrayImage:
        if not 1 <= index <= self.length:
            raise MissingFrame(f"{self.name}: frame {index} outside 1..{self.length}")
        if self.frames is not None:
            return self.frames[index - 1]
        if index - 1 >= len(self.frame_paths):
            raise MissingFrame(f"{self.name}: no image for frame {index}")
        return load_frame(self.frame_paths[index - 1])

    def evaluation_gt(self) -> dict[int, list[GTObject]]:
        """Ground truth restricted to pedestrians with visibility >= 0.25, every frame keyed."""
        if self.ground_truth is None:
            raise NoGroundTruth(f"{self.name}: no ground truth available")
        return {f: [g for g in self.ground_truth.get(f, []) if g.evaluable]
                for f in range(1, self.length + 1)}


# ---------------------------------------------------------------- seqinfo

_SEQINFO_INT_KEYS = ("seqLength", "imWidth", "imHeight")


def parse_seqinfo(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise MissingSeqInfo(f"{path} not found")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are camelCase
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise MissingSeqInfo(f"{path}: unparsable ({exc})") from exc
    if not parser.has_section("Sequence"):
        raise MissingSeqInfo(f"{path}: no [Sequence] section")
    sec = parser["Sequence"]
    info = {k.strip(): v.strip() for k, v in sec.items()}
    try:
        out = {
            "name": info.get("name", path.parent.name),
            "imDir": info.get("imDir", "img1"),
            "frameRate": float(info["frameRate"]),
            "imExt": info.get("imExt", ".jpg"),
        }
        for k in _SEQINFO_INT_KEYS:
            out[k] = int(info[k])
    except (KeyError, ValueError) as exc:
        raise MissingSeqInfo(f"{path}: missing or invalid key ({exc})") from exc
    if not out["imExt"].startswith("."):
        out["imExt"] = "." + out["imExt"]
    return out


def write_seqinfo(path, name: str, fps: float, length: int, width: int, height: int,
                  im_dir: str = "img1", im_ext: str = ".png") -> None:
    fr = int(fps) if float(fps).is_integer() else fps
    text = (
        "[Sequence]\n"
        f"name={name}\n"
        f"imDir={im_dir}\n"
        f"frameRate={fr}\n"
        f"seqLength={length}\n"
        f"imWidth={width}\n"
        f"imHeight={height}\n"
        f"imExt={im_ext}\n"
    )
    Path(path).write_text(text)


# ---------------------------------------------------------------- CSV rows

def _parse_rows(path, min_fields: int) -> Iterable[tuple[int, list[float]]]:
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = [p.strip() for p in re.split(r"[,\s]+", line) if p.strip() != ""]
            if len(parts) < min_fields:
                raise MalformedLine(path, lineno, f"expected >= {min_fields} fields, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise MalformedLine(path, lineno, "non-numeric field") from None
            if not all(math.isfinite(v) for v in vals[:6]):
                raise MalformedLine(path, lineno, "non-finite coordinate")
            frame = int(vals[0])
            if frame != vals[0] or frame < 1:
                raise MalformedLine(path, lineno, "frame index must be a positive integer")
            if vals[4] < 0 or vals[5] < 0:
                raise MalformedLine(path, lineno, "negative box size")
            yield lineno, vals


def read_detections(path, confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR) -> dict[int, list[Detection]]:
    """det.txt rows: frame,id,left,top,width,height,conf[,x,y,z]. Confidences are clipped to [0, 1]."""
    out: dict[int, list[Detection]] = {}
    for _, v in _parse_rows(path, 7):
        conf = v[6]
        if conf < confidence_floor:
            continue
        frame = int(v[0])
        det = Detection(BoundingBox(v[2], v[3], v[4], v[5]), min(1.0, max(0.0, conf)), frame)
        out.setdefault(frame, []).append(det)
    return out


def read_ground_truth(path) -> dict[int, list[GTObject]]:
    """gt.txt rows in either layout.

    * 6/7 fields: frame,id,l,t,w,h[,flag] - class pedestrian, visibility 1.
    * 9 fields (MOT16/17): frame,id,l,t,w,h,flag,class,visibility.
    * 10 fields (MOT15): frame,id,l,t,w,h,flag,x,y,z - world coordinates ignored.
    """
    out: dict[int, list[GTObject]] = {}
    for _, v in _parse_rows(path, 6):
        flag = int(v[6]) if len(v) > 6 else 1
        cls, vis = PEDESTRIAN_CLASS, 1.0
        if len(v) == 9:
            cls, vis = int(v[7]), float(v[8])
        obj = GTObject(int(v[1]), BoundingBox(v[2], v[3], v[4], v[5]), cls, vis, flag)
        out.setdefault(int(v[0]), []).append(obj)
    return out


def read_results(path) -> dict[int, list[tuple[int, BoundingBox]]]:
    out: dict[int, list[tuple[int, BoundingBox]]] = {}
    for _, v in _parse_rows(path, 6):
        out.setdefault(int(v[0]), []).append((int(v[1]), BoundingBox(v[2], v[3], v[4], v[5])))
    return out


def format_results(rows: dict[int, Sequence[tuple[int, BoundingBox]]]) -> str:
    buf = io.StringIO()
    for frame in sorted(rows):
        for tid, box in sorted(rows[frame], key=lambda r: r[0]):
            if tid <= 0:
                raise ValueError(f"track ids must be positive, got {tid}")
            buf.write(f"{frame},{tid},{box.left:.2f},{box.top:.2f},{box.width:.2f},{box.height:.2f},1,-1,-1,-1\n")
    return buf.getvalue()


def write_results(path, rows: dict[int, Sequence[tuple[int, BoundingBox]]]) -> None:
    Path(path).write_text(format_results(rows))


def write_detections(path, dets: dict[int, Sequence[Detection]]) -> None:
    with open(path, "w") as fh:
        for frame in sorted(dets):
            for d in dets[frame]:
                b = d.box
                fh.write(f"{frame},-1,{b.left:.2f},{b.top:.2f},{b.width:.2f},{b.height:.2f},{d.confidence:.4f},-1,-1,-1\n")


def write_ground_truth(path, gt: dict[int, Sequence[GTObject]]) -> None:
    with open(path, "w") as fh:
        for frame in sorted(gt):
            for g in sorted(gt[frame], key=lambda o: o.id):
                b = g.box
                fh.write(f"{frame},{g.id},{b.left:.2f},{b.top:.2f},{b.width:.2f},{b.height:.2f},"
                         f"{g.flag},{g.cls},{g.visibility:.4f}\n")


# ---------------------------------------------------------------- sequences

def _frame_index(p: Path) -> Optional[int]:
    m = re.search(r"(\d+)$", p.stem)
    return int(m.group(1)) if m else None


def list_frames(img_dir: Path, ext: str, length: int) -> list[Path]:
    if not img_dir.is_dir():
        raise MissingFrameFile(f"image directory {img_dir} not found")
    indexed = {}
    for p in img_dir.iterdir():
        if p.suffix.lower() != ext.lower():
            continue
        idx = _frame_index(p)
        if idx is not None:
            indexed[idx] = p
    missing = [i for i in range(1, length + 1) if i not in indexed]
    if missing:
        raise MissingFrameFile(f"{img_dir}: frames {missing[:5]} missing")
    return [indexed[i] for i in range(1, length + 1)]


def load_sequence(root, confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
                  check_frames: bool = True) -> SequenceBundle:
    root = Path(root)
    info = parse_seqinfo(root / "seqinfo.ini")
    length = info["seqLength"]
    frames = list_frames(root / info["imDir"], info["imExt"], length) if check_frames else []
    det_path = root / "det" / "det.txt"
    gt_path = root / "gt" / "gt.txt"
    dets = read_detections(det_path, confidence_floor) if det_path.is_file() else {}
    gt = read_ground_truth(gt_path) if gt_path.is_file() else None
    return SequenceBundle(
        name=info["name"], fps=info["frameRate"], width=info["imWidth"], height=info["imHeight"],
        length=length, frame_paths=frames, detections_by_frame=dets, ground_truth=gt, root=root,
    )


def discover_sequences(data_root, names: Optional[Sequence[str]] = None) -> list[Path]:
    """Sequence directories under ``data_root`` (or ``data_root`` itself)."""
    data_root = Path(data_root)
    if (data_root / "seqinfo.ini").is_file():
        found = [data_root]
    else:
        found = sorted(p for p in data_root.iterdir() if (p / "seqinfo.ini").is_file()) if data_root.is_dir() else []
    if names:
        wanted = set(names)
        found = [p for p in found if p.name in wanted]
        missing = wanted - {p.name for p in found}
        if missing:
            raise MissingSeqInfo(f"sequences not found under {data_root}: {sorted(missing)}")
    if not found:
        raise MissingSeqInfo(f"no sequences under {data_root}")
    return found


# ---------------------------------------------------------------- images

def load_frame(path) -> GrayImage:
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "I", "I;16", "F"):
                arr = np.asarray(im, dtype=np.float64)
            else:
                arr = rgb_to_gray(np.asarray(im.convert("RGB")))
    except FileNotFoundError:
        raise MissingFrameFile(f"{path} not found") from None
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    return GrayImage(arr)


def save_frame(path, image: GrayImage) -> None:
    arr = np.clip(np.rint(image.data), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


# ---------------------------------------------------------------- detection sources

@dataclass(frozen=True)
class OracleParams:
    sigma: float = 0.0
    drop: float = 0.0
    fp_rate: float = 0.0
    seed: int = 0


def oracle_detections(gt_frame: Optional[Sequence[GTObject]], frame_index: int, params: OracleParams,
                      image_size: tuple[int, int] = (1920, 1080)) -> list[Detection]:
    """Ground-truth-derived stand-in for a detector.

    Uses PCG64 seeded with (seed, frame_index). Per GT box, draw order is: one
    uniform (drop test), then four normals (left, top, width, height jitter) -
    always drawn so the stream layout is fixed. Then a Poisson false-positive
    count with mean fp_rate * |gt|, then per false positive three uniforms:
    width, left, top (height is twice the width). All confidences are 1.
    """
    if gt_frame is None:
        raise NoGroundTruth(f"no ground truth for frame {frame_index}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(params.seed), int(frame_index)])))
    out = []
    objs = [g for g in gt_frame if g.evaluable]
    for g in objs:
        u = rng.random()
        noise = rng.standard_normal(4) * params.sigma
        if u < params.drop:
            continue
        b = g.box
        w = max(1.0, b.width + noise[2])
        h = max(1.0, b.height + noise[3])
        out.append(Detection(BoundingBox(b.left + noise[0], b.top + noise[1], w, h), 1.0, frame_index))
    n_fp = int(rng.poisson(params.fp_rate * len(objs))) if params.fp_rate > 0 else 0
    img_w, img_h = image_size
    for _ in range(n_fp):
        w = rng.uniform(16.0, max(17.0, 0.1 * img_w))
        h = 2.0 * w
        x = rng.uniform(0.0, max(0.0, img_w - w))
        y = rng.uniform(0.0, max(0.0, img_h - h))
        out.append(Detection(BoundingBox(x, y, w, h), 1.0, frame_index))
    return out


class DetectionSource:
    """Answers detection queries for one sequence and counts detector calls."""

    def __init__(self, fetch: Callable[[int], list[Detection]]):
        self._fetch = fetch
        self.calls: list[int] = []

    def __call__(self, frame_index: int) -> list[Detection]:
        self.calls.append(frame_index)
        return self._fetch(frame_index)

    @classmethod
    def file_backed(cls, bundle: SequenceBundle) -> "DetectionSource":
        if not bundle.detections_by_frame and bundle.length > 0:
            raise MissingDetections(f"{bundle.name}: no detections loaded")
        return cls(lambda f: list(bundle.detections_by_frame.get(f, [])))

    @classmethod
    def oracle(cls, bundle: SequenceBundle, params: OracleParams) -> "DetectionSource":
        if bundle.ground_truth is None:
            raise NoGroundTruth(f"{bundle.name}: oracle detections need ground truth")
        gt = bundle.ground_truth
        size = (bundle.width, bundle.height)
        return cls(lambda f: oracle_detections(gt.get(f, []), f, params, size))
