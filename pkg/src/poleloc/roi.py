"""Crop-rectangle estimation from corner statistics and row-sum profiles.

The vertical extent comes from two pointers walking the row-profile
gradient toward the corner cluster center; the horizontal extent is the
cluster x spread by a configurable multiple of the found height.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .corners import CornerSet, cluster_center
from .errors import DegenerateProfileWarning, DegenerateRoiError
from .image import GrayImage, Point2, round_half_away


@dataclass(frozen=True)
class RowProfile:
    """Per-row accumulated grayscale values."""

    sums: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.sums, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("profile must be a non-empty 1D sequence")
        object.__setattr__(self, "sums", arr)

    @property
    def height(self) -> int:
        return int(self.sums.size)


@dataclass(frozen=True)
class RoiParams:
    """Scan parameters: relative gradient threshold, pointer steps, width factor."""

    tau: float = 0.15
    delta_a: int = 1
    delta_b: int = 1
    lam: float = 0.75

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise ValueError(f"tau must be in (0, 1), got {self.tau}")
        if self.delta_a < 1 or self.delta_b < 1:
            raise ValueError("pointer steps must be >= 1")
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")


@dataclass(frozen=True)
class Roi:
    """Axis-aligned crop; top/left inclusive, bottom/right exclusive."""

    top: int
    bottom: int
    left: int
    right: int

    def __post_init__(self):
        if not (0 <= self.top < self.bottom):
            raise ValueError(f"need 0 <= top < bottom, got {self.top}, {self.bottom}")
        if not (0 <= self.left < self.right):
            raise ValueError(f"need 0 <= left < right, got {self.left}, {self.right}")

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    def crop(self, img: GrayImage) -> GrayImage:
        return GrayImage(img.pixels[self.top : self.bottom, self.left : self.right])

    def contains(self, p: Point2, margin: float = 0.0) -> bool:
        return (
            self.left + margin <= p.x <= self.right - 1 - margin
            and self.top + margin <= p.y <= self.bottom - 1 - margin
        )


def row_profile(img: GrayImage) -> RowProfile:
    """sums[y] = sum of row y's pixel values."""
    return RowProfile(img.as_float().sum(axis=1))


def scan_bounds(profile: RowProfile, y0: int, params: RoiParams) -> tuple[int, int]:
    """Vertical band (top, bottom) from two pointers meeting at row y0.

    The upper pointer walks rows 0, delta_b, 2*delta_b, ... and stops at
    the first row whose forward profile difference exceeds tau times the
    profile's dynamic range; the lower pointer walks H-1, H-1-delta_a, ...
    testing the backward difference. A pointer reaching y0 stops there.
    Returns top < bottom always; a flat profile warns and yields (0, H).
    """
    h = profile.height
    if not 0 <= y0 < h:
        raise ValueError(f"y0 must be in [0, {h}), got {y0}")
    sums = profile.sums
    span = float(sums.max() - sums.min())
    if span == 0.0:
        warnings.warn(
            "row profile has zero dynamic range; using full-height bounds",
            DegenerateProfileWarning,
            stacklevel=2,
        )
        return 0, h
    grad = np.abs(np.diff(sums))  # grad[y] = |sums[y+1] - sums[y]|
    limit = params.tau * span

    top = y0
    for b in range(0, y0, params.delta_b):
        if grad[b] > limit:
            top = b
            break

    bottom = y0
    for a in range(h - 1, y0, -params.delta_a):
        if grad[a - 1] > limit:
            bottom = a
            break

    return min(top, y0), max(bottom, y0 + 1)


def roi_from_bounds(
    x0: float, top: int, bottom: int, lam: float, dims: tuple[int, int]
) -> Roi:
    """Crop rectangle around column x0 with half-width lam * band height."""
    if not top < bottom:
        raise ValueError(f"need top < bottom, got {top}, {bottom}")
    w, h = dims
    half_width = lam * abs(bottom - top)
    left = max(0, min(w, round_half_away(x0 - half_width)))
    right = max(0, min(w, round_half_away(x0 + half_width)))
    top_c = max(0, min(h, top))
    bottom_c = max(0, min(h, bottom))
    if right <= left or bottom_c <= top_c:
        raise DegenerateRoiError(
            f"clamped to empty rectangle: rows [{top_c}, {bottom_c}), "
            f"cols [{left}, {right})"
        )
    return Roi(top=top_c, bottom=bottom_c, left=left, right=right)


def estimate_roi(img: GrayImage, corners: CornerSet, params: RoiParams) -> Roi:
    """Full estimate: cluster center, row profile, pointer scan, width rule."""
    center = cluster_center(corners)
    profile = row_profile(img)
    y0 = max(0, min(img.height - 1, round_half_away(center.y)))
    top, bottom = scan_bounds(profile, y0, params)
    return roi_from_bounds(center.x, top, bottom, params.lam, (img.width, img.height))
