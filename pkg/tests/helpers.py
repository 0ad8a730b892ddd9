import numpy as np

from skiptrack.core import BoundingBox, GrayImage


def random_instance(rng, max_objects=4, max_frames=20, img=100.0):
    """Random small tracking instance: (gt, pred, n_frames).

    Predictions follow ground truth with jitter, dropouts, identity switches and
    false positives, so every metric branch is exercised.
    """
    n_frames = int(rng.integers(1, max_frames + 1))
    n_obj = int(rng.integers(1, max_objects + 1))
    gt, pred = {}, {}
    next_pid = 100
    for oid in range(1, n_obj + 1):
        start = int(rng.integers(1, n_frames + 1))
        end = int(rng.integers(start, n_frames + 1))
        x, y = rng.uniform(0, img * 0.7, size=2)
        w, h = rng.uniform(8, 25, size=2)
        vx, vy = rng.normal(0, 3, size=2)
        pid = next_pid
        next_pid += 1
        jitter = rng.uniform(0.2, 4.0)
        for f in range(start, end + 1):
            t = f - start
            box = BoundingBox(x + vx * t, y + vy * t, w, h)
            gt.setdefault(f, []).append((oid, box))
            if rng.random() < 0.15:
                continue
            if rng.random() < 0.1:
                pid = next_pid
                next_pid += 1
            dx, dy, dw, dh = rng.normal(0, jitter, size=4)
            pb = BoundingBox(box.left + dx, box.top + dy, max(1.0, w + dw), max(1.0, h + dh))
            pred.setdefault(f, []).append((pid, pb))
    for f in range(1, n_frames + 1):
        if rng.random() < 0.2:
            x, y = rng.uniform(0, img * 0.8, size=2)
            pred.setdefault(f, []).append((next_pid, BoundingBox(x, y, *rng.uniform(8, 25, size=2))))
            next_pid += 1
    return gt, pred, n_frames


def random_gray(rng, w=None, h=None, smooth=True):
    w = w or int(rng.integers(4, 48))
    h = h or int(rng.integers(4, 48))
    data = rng.uniform(0, 255, size=(h, w))
    if smooth and min(w, h) > 3:
        data = (data + np.roll(data, 1, 0) + np.roll(data, 1, 1)) / 3
    return GrayImage(data)
