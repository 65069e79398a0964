"""Vectorized NumPy implementation of the segment-test kernels.

A pixel passes the test iff the 16-pixel Bresenham circle of radius 3
around it contains >= 9 circularly contiguous pixels that are all
brighter than center + t or all darker than center - t (strict).
"""

import numpy as np

# (dx, dy) around the radius-3 circle, clockwise from 12 o'clock.
CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1),
    (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1),
    (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)

ARC = 9  # required contiguous pixels
BORDER = 3


def _ring_stack(pixels: np.ndarray) -> np.ndarray:
    """(16, H-6, W-6) int16 stack of circle values for every interior pixel."""
    h, w = pixels.shape
    p = pixels.astype(np.int16)
    ring = np.empty((16, h - 6, w - 6), dtype=np.int16)
    for k, (dx, dy) in enumerate(CIRCLE):
        ring[k] = p[BORDER + dy : h - BORDER + dy, BORDER + dx : w - BORDER + dx]
    return ring


def segment_mask(pixels: np.ndarray, t: int) -> np.ndarray:
    h, w = pixels.shape
    mask = np.zeros((h, w), dtype=bool)
    if h < 7 or w < 7:
        return mask
    ring = _ring_stack(pixels)
    center = pixels[BORDER : h - BORDER, BORDER : w - BORDER].astype(np.int16)
    ok = np.zeros(center.shape, dtype=bool)
    for flags in (ring > center + t, ring < center - t):
        for start in range(16):
            run = flags[start].copy()
            for j in range(1, ARC):
                run &= flags[(start + j) % 16]
            ok |= run
    mask[BORDER : h - BORDER, BORDER : w - BORDER] = ok
    return mask


def corner_scores(
    pixels: np.ndarray, ys: np.ndarray, xs: np.ndarray, t: int
) -> np.ndarray:
    """Max threshold at which each (y, x) still passes the segment test.

    Exact closed form of the threshold search: over each 9-long arc the
    brightest admissible t is min(arc) - center - 1 (bright case) or
    center - max(arc) - 1 (dark case); the score is the best over arcs.
    """
    ys = np.asarray(ys, dtype=np.int64)
    xs = np.asarray(xs, dtype=np.int64)
    if ys.size == 0:
        return np.zeros(0, dtype=np.int64)
    p = pixels.astype(np.int16)
    ring = np.empty((ys.size, 16), dtype=np.int16)
    for k, (dx, dy) in enumerate(CIRCLE):
        ring[:, k] = p[ys + dy, xs + dx]
    center = p[ys, xs]

    idx = np.arange(16)
    windows = (idx[:, None] + np.arange(ARC)[None, :]) % 16  # (16, 9)
    arcs = ring[:, windows]  # (n, 16, 9)
    bright = arcs.min(axis=2).max(axis=1).astype(np.int64) - center - 1
    dark = center.astype(np.int64) - arcs.max(axis=2).min(axis=1) - 1
    # Points failing the test at t report t - 1, matching the compiled kernel.
    return np.maximum(np.maximum(bright, dark), t - 1)


def _max_run(flags: np.ndarray) -> np.ndarray:
    """Longest circular run of True per row of a (n, 16) boolean array."""
    doubled = np.concatenate([flags, flags], axis=1)
    idx = np.arange(doubled.shape[1])
    last_false = np.maximum.accumulate(np.where(~doubled, idx, -1), axis=1)
    runs = idx - last_false
    return np.minimum(runs.max(axis=1), 16).astype(np.int64)


def arc_lengths(
    pixels: np.ndarray, ys: np.ndarray, xs: np.ndarray, t: int
) -> np.ndarray:
    """Longest contiguous qualifying arc at threshold t for each (y, x)."""
    ys = np.asarray(ys, dtype=np.int64)
    xs = np.asarray(xs, dtype=np.int64)
    if ys.size == 0:
        return np.zeros(0, dtype=np.int64)
    p = pixels.astype(np.int16)
    ring = np.empty((ys.size, 16), dtype=np.int16)
    for k, (dx, dy) in enumerate(CIRCLE):
        ring[:, k] = p[ys + dy, xs + dx]
    center = p[ys, xs][:, None]
    return np.maximum(_max_run(ring > center + t), _max_run(ring < center - t))
