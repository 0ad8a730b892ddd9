"""Low-cost crop similarity measures used for the detect/skip decision.

Three measures are available:

* ``NCC``  - Pearson correlation of two crops resampled to a common size.
* ``HOG``  - cosine similarity of histogram-of-oriented-gradient descriptors.
* ``EIGEN`` - smaller eigenvalue of the 2x2 covariance of paired gray levels
  (0 for identical images, grows with dissimilarity).

NCC and HOG are "higher is more similar"; the eigenvalue measure is inverted,
so a frame passes when the value is at or below its threshold.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import GrayImage
from .errors import DimensionMismatch, EmptyCrop


class Measure(str, enum.Enum):
    NCC = "ncc"
    HOG = "hog"
    EIGEN = "eigen"


class _NoTracks:
    """Sentinel: nothing to compare, the frame must be detected."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NoTracks"

    def __reduce__(self):
        return (_NoTracks, ())


NoTracks = _NoTracks()
Score = Union[float, _NoTracks]


@dataclass(frozen=True)
class HogParams:
    cell_size: int = 8
    bins: int = 9
    block_cells: int = 2
    resize_to: tuple[int, int] = (64, 128)  # (width, height)

    @property
    def feature_length(self) -> int:
        w, h = self.resize_to
        cx, cy = w // self.cell_size, h // self.cell_size
        nb = self.block_cells
        return (cx - nb + 1) * (cy - nb + 1) * nb * nb * self.bins


@dataclass(frozen=True)
class SimilarityConfig:
    measure: Measure = Measure.NCC
    ncc_threshold: float = 0.75
    hog_threshold: float = 0.85
    # per-video; no universal default exists
    eigen_threshold: float = 100.0
    eigen_aggregate: str = "mean"  # "mean" | "sum"
    # "crops" compares per-track crops; "whole" compares full frames
    eigen_scope: str = "crops"
    hog_params: HogParams = field(default_factory=HogParams)
    ncc_resize_to: tuple[int, int] = (32, 32)  # (width, height)

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        for name in ("ncc_threshold", "hog_threshold"):
            v = getattr(self, name)
            # thresholds above 1 are allowed: they disable skipping entirely
            if not math.isfinite(v) or v < -1.0:
                raise ValueError(f"{name}={v} must be >= -1")
        if self.eigen_threshold < 0:
            raise ValueError("eigen_threshold must be nonnegative")
        if self.eigen_aggregate not in ("mean", "sum"):
            raise ValueError("eigen_aggregate must be 'mean' or 'sum'")
        if self.eigen_scope not in ("crops", "whole"):
            raise ValueError("eigen_scope must be 'crops' or 'whole'")


def resize_bilinear(img: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resampling with half-pixel centers; identity when the size is unchanged."""
    img = np.asarray(img, dtype=np.float64)
    if img.size == 0:
        raise EmptyCrop("cannot resize an empty image")
    in_h, in_w = img.shape
    if (in_w, in_h) == (width, height):
        return img.copy()
    ys = _sample_coords(in_h, height)
    xs = _sample_coords(in_w, width)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


def _sample_coords(n_in: int, n_out: int) -> np.ndarray:
    c = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    return np.clip(c, 0, n_in - 1)


def _pixels(img: Union[GrayImage, np.ndarray]) -> np.ndarray:
    arr = img.data if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)
    if arr.size == 0:
        raise EmptyCrop("empty image")
    return arr


# ---------------------------------------------------------------- NCC

def ncc(template, candidate, resize_to: Optional[tuple[int, int]] = (32, 32)) -> float:
    t = _pixels(template)
    f = _pixels(candidate)
    if resize_to is not None:
        t = resize_bilinear(t, *resize_to)
        f = resize_bilinear(f, *resize_to)
    elif t.shape != f.shape:
        raise DimensionMismatch(f"{t.shape} vs {f.shape}")
    return pearson(t.ravel(), f.ravel())


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    saa = float(np.dot(da, da))
    sbb = float(np.dot(db, db))
    scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max())) ** 2 * a.size
    tiny = 1e-20 * scale
    if saa <= tiny or sbb <= tiny:
        return 1.0 if (saa <= tiny and sbb <= tiny and np.array_equal(a, b)) else 0.0
    r = float(np.dot(da, db)) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


# ---------------------------------------------------------------- HOG

def gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centered [-1, 0, 1] differences with replicated borders."""
    p = np.pad(img, 1, mode="edge")
    gx = p[1:-1, 2:] - p[1:-1, :-2]
    gy = p[2:, 1:-1] - p[:-2, 1:-1]
    return gx, gy


def hog_features(image, params: HogParams = HogParams()) -> np.ndarray:
    """Unit-norm HOG descriptor (zero vector for an image without gradients).

    Unsigned orientations in [0, 180) are voted into ``bins`` bins centered at
    multiples of 180/bins with linear interpolation between neighbouring bins.
    Blocks of ``block_cells``x``block_cells`` cells slide by one cell and are
    L2-normalised before concatenation.
    """
    img = resize_bilinear(_pixels(image), *params.resize_to)
    gx, gy = gradients(img)
    mag = np.hypot(gx, gy)
    ang = np.rad2deg(np.arctan2(gy, gx)) % 180.0

    nb = params.bins
    width_deg = 180.0 / nb
    pos = ang / width_deg
    lo = np.floor(pos).astype(int) % nb
    hi = (lo + 1) % nb
    w_hi = pos - np.floor(pos)
    w_lo = 1.0 - w_hi

    cs = params.cell_size
    h, w = img.shape
    ncy, ncx = h // cs, w // cs
    hist = np.zeros((ncy, ncx, nb))
    cy_idx = (np.arange(h) // cs)[:, None].repeat(w, axis=1)
    cx_idx = (np.arange(w) // cs)[None, :].repeat(h, axis=0)
    keep = (cy_idx < ncy) & (cx_idx < ncx)
    flat_cell = (cy_idx * ncx + cx_idx)[keep]
    flat = hist.reshape(-1)
    np.add.at(flat, flat_cell * nb + lo[keep], (mag * w_lo)[keep])
    np.add.at(flat, flat_cell * nb + hi[keep], (mag * w_hi)[keep])

    bc = params.block_cells
    blocks = []
    eps = 1e-12
    for by in range(ncy - bc + 1):
        for bx in range(ncx - bc + 1):
            v = hist[by:by + bc, bx:bx + bc].ravel()
            blocks.append(v / math.sqrt(float(v @ v) + eps * eps))
    feat = np.concatenate(blocks) if blocks else np.zeros(0)
    norm = float(np.linalg.norm(feat))
    if norm <= 1e-12:
        return np.zeros_like(feat)
    return feat / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return min(1.0, max(-1.0, float(a @ b) / (na * nb)))


def hog_similarity(a, b, params: HogParams = HogParams()) -> float:
    return cosine(hog_features(a, params), hog_features(b, params))


# ---------------------------------------------------------------- eigenvalue

def eigen_similarity(a, b) -> float:
    """Smaller eigenvalue of the covariance of (a_i, b_i) gray-level pairs.

    ``b`` is resampled to the size of ``a`` first. Population covariance (1/N).
    """
    x = _pixels(a)
    y = _pixels(b)
    if y.shape != x.shape:
        y = resize_bilinear(y, x.shape[1], x.shape[0])
        if y.shape != x.shape:
            raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    x = x.ravel()
    y = y.ravel()
    dx = x - x.mean()
    dy = y - y.mean()
    n = x.size
    sxx = float(dx @ dx) / n
    syy = float(dy @ dy) / n
    sxy = float(dx @ dy) / n
    return min_eigenvalue_2x2(sxx, sxy, syy)


def min_eigenvalue_2x2(a: float, b: float, c: float) -> float:
    """Smaller eigenvalue of the symmetric matrix [[a, b], [b, c]], clamped at 0."""
    half_tr = 0.5 * (a + c)
    det = a * c - b * b
    disc = math.hypot(0.5 * (a - c), b)
    big = half_tr + disc
    if big <= 0.0:
        return 0.0
    # det / big avoids cancellation in half_tr - disc
    return max(0.0, det / big)


# ---------------------------------------------------------------- frame level

def pair_similarity(template, estimate, config: SimilarityConfig) -> float:
    if config.measure is Measure.NCC:
        return ncc(template, estimate, config.ncc_resize_to)
    if config.measure is Measure.HOG:
        return hog_similarity(template, estimate, config.hog_params)
    return eigen_similarity(template, estimate)


def failing_score(config: SimilarityConfig) -> float:
    """Score assigned to a pair whose estimated crop could not be taken."""
    if config.measure is Measure.EIGEN:
        return math.inf
    return -1.0


def frame_similarity(prev_crops: Sequence, est_crops: Sequence, config: SimilarityConfig) -> Score:
    """Aggregate per-pair similarity; ``None`` entries in ``est_crops`` score as failures."""
    if len(prev_crops) != len(est_crops):
        raise ValueError("crop lists differ in length")
    if not prev_crops:
        return NoTracks
    scores = []
    for t, e in zip(prev_crops, est_crops):
        if e is None:
            scores.append(failing_score(config))
        else:
            scores.append(pair_similarity(t, e, config))
    total = math.fsum(scores)
    if config.measure is Measure.EIGEN and config.eigen_aggregate == "sum":
        return total
    return total / len(scores)


def passes(score: Score, config: SimilarityConfig) -> bool:
    """Skip predicate: True when the similarity is good enough to skip detection."""
    if score is NoTracks:
        return False
    if config.measure is Measure.NCC:
        return score >= config.ncc_threshold
    if config.measure is Measure.HOG:
        return score >= config.hog_threshold
    return score <= config.eigen_threshold
