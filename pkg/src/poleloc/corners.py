"""Segment-test corner detection with Harris ranking and patch orientation.

Detection runs the 16-pixel circle test (9 contiguous brighter/darker),
suppresses non-maxima of the threshold score in 3x3 neighborhoods, ranks
survivors by the Harris measure, and attaches an intensity-centroid
orientation to each corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import EmptyCornerSetError, ImageTooSmallError, OutOfBoundsError
from .image import GrayImage, Point2

HARRIS_K = 0.04
HARRIS_WINDOW = 7  # uniform accumulation window for the structure tensor
MIN_DIM = 7
DEFAULT_THRESHOLD = 20


class CornerPoint(NamedTuple):
    position: Point2
    response: float = 0.0
    orientation: float = 0.0


@dataclass(frozen=True)
class CornerSet:
    """Corners of one image, sorted by descending response."""

    corners: tuple[CornerPoint, ...]
    source_dims: tuple[int, int]  # (width, height)

    def __len__(self) -> int:
        return len(self.corners)

    def positions(self) -> np.ndarray:
        return np.array([(c.position.x, c.position.y) for c in self.corners]).reshape(
            -1, 2
        )


def _require_size(img: GrayImage) -> None:
    if img.height < MIN_DIM or img.width < MIN_DIM:
        raise ImageTooSmallError(
            f"need at least {MIN_DIM}x{MIN_DIM}, got {img.width}x{img.height}"
        )


def _nonmax_suppress(score: np.ndarray) -> np.ndarray:
    """3x3 NMS; equal scores are won by the earlier row-major pixel."""
    s = np.pad(score, 1, mode="constant", constant_values=-1)
    center = s[1:-1, 1:-1]
    keep = center > -1
    # Neighbors preceding the pixel in row-major order suppress on >=.
    for dy, dx in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
        keep &= s[1 + dy : s.shape[0] - 1 + dy, 1 + dx : s.shape[1] - 1 + dx] < center
    for dy, dx in ((0, 1), (1, -1), (1, 0), (1, 1)):
        keep &= s[1 + dy : s.shape[0] - 1 + dy, 1 + dx : s.shape[1] - 1 + dx] <= center
    return keep


def fast_detect(
    img: GrayImage, intensity_threshold: int, nonmax: bool = True
) -> list[CornerPoint]:
    """Segment-test corners at integer pixel positions, responses unset.

    With nonmax=True (default), the max-threshold score drives 3x3
    non-maximum suppression; score ties go to the longer qualifying arc,
    then to the earlier row-major pixel. With nonmax=False every pixel
    passing the circle test is returned.
    """
    _require_size(img)
    t = int(intensity_threshold)
    if not 1 <= t <= 255:
        raise ValueError(f"intensity threshold must be in [1, 255], got {t}")
    mask = _kernels.segment_mask(img.pixels, t)
    ys, xs = np.nonzero(mask)
    if nonmax and ys.size:
        scores = _kernels.corner_scores(img.pixels, ys, xs, t)
        arcs = _kernels.arc_lengths(img.pixels, ys, xs, t)
        key_map = np.full(img.pixels.shape, -1, dtype=np.int64)
        key_map[ys, xs] = scores * 17 + arcs  # lexicographic (score, arc)
        keep = _nonmax_suppress(key_map)
        ys, xs = np.nonzero(keep)
    return [CornerPoint(Point2(float(x), float(y))) for y, x in zip(ys, xs)]


def _sobel(pixels: np.ndarray, pad: bool) -> tuple[np.ndarray, np.ndarray]:
    """Sobel gradients; pad=True replicates edges to keep the full size."""
    p = pixels.astype(np.float64)
    if pad:
        p = np.pad(p, 1, mode="edge")
    gx = (
        (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    return gx, gy


def _box_sum(a: np.ndarray, radius: int) -> np.ndarray:
    """Sum over (2*radius+1)^2 windows via an integral image, same size."""
    k = 2 * radius + 1
    padded = np.pad(a, radius, mode="edge")
    ii = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.float64)
    ii[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
    return ii[k:, k:] - ii[:-k, k:] - ii[k:, :-k] + ii[:-k, :-k]


def _harris_terms(sxx: np.ndarray, syy: np.ndarray, sxy: np.ndarray) -> np.ndarray:
    return sxx * syy - sxy * sxy - HARRIS_K * (sxx + syy) ** 2


def harris_response_map(img: GrayImage) -> np.ndarray:
    """Harris measure at every pixel, edges handled by replication.

    Interior values (>= 4 px from the border) match harris_response
    exactly; near the border the replicated samples make it defined but
    approximate.
    """
    gx, gy = _sobel(img.pixels, pad=True)
    r = HARRIS_WINDOW // 2
    sxx = _box_sum(gx * gx, r)
    syy = _box_sum(gy * gy, r)
    sxy = _box_sum(gx * gy, r)
    return _harris_terms(sxx, syy, sxy)


def harris_response(img: GrayImage, p: Point2) -> float:
    """det(M) - k*trace(M)^2 of the gradient structure tensor at p.

    Gradients come from 3x3 Sobel operators and are accumulated with
    uniform weights over a 7x7 window, so p must sit at least 4 px from
    every border.
    """
    x, y = int(p.x), int(p.y)
    r = HARRIS_WINDOW // 2
    margin = r + 1
    if not (
        margin <= x < img.width - margin and margin <= y < img.height - margin
    ):
        raise OutOfBoundsError(f"point ({x}, {y}) closer than {margin} px to border")
    # Gradient window plus the 1-px Sobel support.
    region = img.pixels[y - r - 1 : y + r + 2, x - r - 1 : x + r + 2]
    gx, gy = _sobel(region, pad=False)
    sxx = float((gx * gx).sum())
    syy = float((gy * gy).sum())
    sxy = float((gx * gy).sum())
    return float(_harris_terms(np.float64(sxx), np.float64(syy), np.float64(sxy)))


def _disk_offsets(radius: int) -> np.ndarray:
    rng = np.arange(-radius, radius + 1)
    dx, dy = np.meshgrid(rng, rng)
    keep = dx * dx + dy * dy <= radius * radius
    return np.stack([dx[keep], dy[keep]], axis=1)


def orientation(img: GrayImage, p: Point2, radius: int = 3) -> float:
    """Intensity-centroid angle atan2(m01, m10) over a disk around p.

    Moments use coordinates relative to p; samples beyond the image edge
    replicate the border. Returns 0 when both first moments vanish.
    """
    x, y = int(p.x), int(p.y)
    offs = _disk_offsets(radius)
    xs = np.clip(x + offs[:, 0], 0, img.width - 1)
    ys = np.clip(y + offs[:, 1], 0, img.height - 1)
    vals = img.pixels[ys, xs].astype(np.float64)
    m10 = float((offs[:, 0] * vals).sum())
    m01 = float((offs[:, 1] * vals).sum())
    if m10 == 0.0 and m01 == 0.0:
        return 0.0
    return math.atan2(m01, m10)


def detect_top_n(
    img: GrayImage, n: int, intensity_threshold: int = DEFAULT_THRESHOLD
) -> CornerSet:
    """Strongest n corners by Harris response, orientation attached.

    Fewer than n detections returns them all. Ordering is descending
    response with row-major position as the tie-break, so results are
    deterministic and a smaller n is always a prefix of a larger one.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    raw = fast_detect(img, intensity_threshold, nonmax=True)
    if not raw:
        return CornerSet((), (img.width, img.height))
    rmap = harris_response_map(img)
    scored = []
    for c in raw:
        x, y = int(c.position.x), int(c.position.y)
        scored.append((float(rmap[y, x]), y, x))
    scored.sort(key=lambda s: (-s[0], s[1], s[2]))
    top = scored[:n]
    corners = tuple(
        CornerPoint(
            Point2(float(x), float(y)),
            response=resp,
            orientation=orientation(img, Point2(float(x), float(y))),
        )
        for resp, y, x in top
    )
    return CornerSet(corners, (img.width, img.height))


def cluster_center(corners: CornerSet) -> Point2:
    """Arithmetic mean of all corner positions."""
    if len(corners) == 0:
        raise EmptyCornerSetError("cannot take the center of zero corners")
    pos = corners.positions()
    return Point2(float(pos[:, 0].mean()), float(pos[:, 1].mean()))
