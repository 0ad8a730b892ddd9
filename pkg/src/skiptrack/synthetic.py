"""Synthetic MOTChallenge-style sequences: textured boxes moving over a textured background."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from .core import BoundingBox, GrayImage
from .sequence_io import (
    DetectionSource, GTObject, OracleParams, SequenceBundle, oracle_detections, save_frame,
    write_detections, write_ground_truth, write_seqinfo,
)


@dataclass(frozen=True)
class SceneConfig:
    width: int = 320
    height: int = 240
    n_frames: int = 100
    fps: float = 25.0
    n_objects: int = 4
    speed_range: tuple[float, float] = (1.0, 4.0)   # px/frame
    size_range: tuple[float, float] = (20.0, 36.0)  # box width px; height is 2x
    late_entries: int = 0     # objects that appear after frame 1 from an image edge
    bounce: bool = True       # reflect at image borders instead of leaving
    accel_std: float = 0.0    # random velocity change per frame (nonlinear motion)
    noise_frames: bool = False  # every frame is fresh noise (no temporal coherence)
    texture_sigma: float = 2.0
    seed: int = 0


@dataclass
class _Obj:
    oid: int
    x: float
    y: float
    vx: float
    vy: float
    w: float
    h: float
    start: int
    texture: np.ndarray


def _texture(rng, h: int, w: int, sigma: float, lo: float, hi: float) -> np.ndarray:
    t = gaussian_filter(rng.standard_normal((h, w)), sigma, mode="wrap")
    t = (t - t.min()) / max(t.max() - t.min(), 1e-9)
    return lo + (hi - lo) * t


def make_scene(cfg: SceneConfig, name: str = "SYN") -> SequenceBundle:
    """Render a scene into an in-memory :class:`SequenceBundle` with ground truth."""
    rng = np.random.default_rng(cfg.seed)
    W, H = cfg.width, cfg.height
    background = _texture(rng, H, W, cfg.texture_sigma * 2, 60.0, 160.0)

    objs: list[_Obj] = []
    n_total = cfg.n_objects + cfg.late_entries
    for i in range(n_total):
        w = float(rng.uniform(*cfg.size_range))
        h = 2.0 * w
        speed = float(rng.uniform(*cfg.speed_range))
        ang = float(rng.uniform(0, 2 * math.pi))
        vx, vy = speed * math.cos(ang), speed * math.sin(ang)
        if i < cfg.n_objects:
            start = 1
            x = float(rng.uniform(0, W - w))
            y = float(rng.uniform(0, H - h))
        else:
            start = int(rng.integers(2, max(3, cfg.n_frames // 2)))
            # enter from the left or right edge, heading inwards
            if rng.random() < 0.5:
                x, vx = -0.5 * w, abs(vx) + 0.5
            else:
                x, vx = W - 0.5 * w, -abs(vx) - 0.5
            y = float(rng.uniform(0, H - h))
        tex = _texture(rng, int(math.ceil(h)) + 1, int(math.ceil(w)) + 1, cfg.texture_sigma, 0.0, 255.0)
        objs.append(_Obj(i + 1, x, y, vx, vy, w, h, start, tex))

    frames: list[GrayImage] = []
    gt: dict[int, list[GTObject]] = {}
    for f in range(1, cfg.n_frames + 1):
        if cfg.noise_frames:
            img = _texture(rng, H, W, 1.0, 0.0, 255.0)
        else:
            img = background.copy()
        rows = []
        for o in objs:
            if f < o.start:
                continue
            if f > o.start:
                if cfg.accel_std > 0:
                    o.vx += float(rng.normal(0, cfg.accel_std))
                    o.vy += float(rng.normal(0, cfg.accel_std))
                o.x += o.vx
                o.y += o.vy
                if cfg.bounce and o.start == 1:
                    if o.x < 0 or o.x + o.w > W:
                        o.vx = -o.vx
                        o.x = min(max(o.x, 0.0), W - o.w)
                    if o.y < 0 or o.y + o.h > H:
                        o.vy = -o.vy
                        o.y = min(max(o.y, 0.0), H - o.h)
            box = BoundingBox(round(o.x, 2), round(o.y, 2), round(o.w, 2), round(o.h, 2))
            vis = _visible_fraction(box, W, H)
            if vis <= 0:
                continue
            if not cfg.noise_frames:
                _paste(img, o.texture, box)
            rows.append(GTObject(o.oid, box, 1, round(vis, 4)))
        frames.append(GrayImage(np.clip(img, 0, 255)))
        gt[f] = rows
    return SequenceBundle(name=name, fps=cfg.fps, width=W, height=H, length=cfg.n_frames,
                          frames=frames, ground_truth=gt)


def static_scene(n_frames: int = 100, n_objects: int = 3, seed: int = 0, **kw) -> SequenceBundle:
    """Identical frames: objects never move."""
    cfg = SceneConfig(n_frames=n_frames, n_objects=n_objects, speed_range=(0.0, 0.0), seed=seed, **kw)
    return make_scene(cfg, name=f"STATIC-{seed}")


def _visible_fraction(box: BoundingBox, W: int, H: int) -> float:
    iw = max(0.0, min(box.right, W) - max(box.left, 0.0))
    ih = max(0.0, min(box.bottom, H) - max(box.top, 0.0))
    return iw * ih / box.area if box.area > 0 else 0.0


def _paste(img: np.ndarray, tex: np.ndarray, box: BoundingBox) -> None:
    H, W = img.shape
    x0, y0 = int(round(box.left)), int(round(box.top))
    w, h = int(round(box.width)), int(round(box.height))
    sx0, sy0 = max(0, -x0), max(0, -y0)
    dx0, dy0 = max(0, x0), max(0, y0)
    dx1, dy1 = min(W, x0 + w), min(H, y0 + h)
    if dx1 <= dx0 or dy1 <= dy0:
        return
    img[dy0:dy1, dx0:dx1] = tex[sy0:sy0 + (dy1 - dy0), sx0:sx0 + (dx1 - dx0)]


def write_sequence(bundle: SequenceBundle, root, oracle: Optional[OracleParams] = OracleParams()) -> Path:
    """Write ``bundle`` as a MOTChallenge directory (PNG frames, gt, and oracle det.txt)."""
    root = Path(root)
    (root / "img1").mkdir(parents=True, exist_ok=True)
    (root / "gt").mkdir(exist_ok=True)
    write_seqinfo(root / "seqinfo.ini", bundle.name, bundle.fps, bundle.length, bundle.width, bundle.height)
    for i in range(1, bundle.length + 1):
        save_frame(root / "img1" / f"{i:06d}.png", bundle.frame(i))
    if bundle.ground_truth is not None:
        write_ground_truth(root / "gt" / "gt.txt", bundle.ground_truth)
        if oracle is not None:
            (root / "det").mkdir(exist_ok=True)
            dets = {f: oracle_detections(bundle.ground_truth.get(f, []), f, oracle, (bundle.width, bundle.height))
                    for f in range(1, bundle.length + 1)}
            write_detections(root / "det" / "det.txt", dets)
    return root


def oracle_source(bundle: SequenceBundle, sigma: float = 0.0, drop: float = 0.0, fp_rate: float = 0.0,
                  seed: int = 0) -> DetectionSource:
    return DetectionSource.oracle(bundle, OracleParams(sigma, drop, fp_rate, seed))
