"""Post-correction of regressed pole positions using nearby corners.

Each prediction is paired with the nearest detected corner within a
matching radius; brightness-histogram patches at both points are scored
against a per-image reference feature, and the two position hypotheses
are fused as a confidence-weighted mean. Predictions without a corner in
range pass through unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corners import CornerPoint, CornerSet
from .errors import BinMismatchError, NoPolesError
from .heatmap import PolePrediction
from .image import GrayImage, Point2, extract_patch


@dataclass(frozen=True)
class PatchFeature:
    """L1-normalized brightness histogram of a square patch."""

    histogram: np.ndarray
    patch_half_size: int

    def __post_init__(self):
        arr = np.asarray(self.histogram, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("histogram must be 1D with at least 2 bins")
        if (arr < 0).any():
            raise ValueError("histogram weights must be non-negative")
        object.__setattr__(self, "histogram", arr)

    @property
    def bins(self) -> int:
        return int(self.histogram.size)


@dataclass(frozen=True)
class CorrectionParams:
    delta: float = 8.0  # corner matching radius, px
    patch_half_size: int = 7  # 15x15 patches
    bins: int = 16
    min_confidence: float = 0.1
    # Confidence pairing: with alpha_from_prediction the weight multiplying
    # the prediction comes from the prediction's own patch (default); the
    # swapped reading assigns it the corner patch's confidence instead.
    alpha_from_prediction: bool = True

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if not 0 <= self.min_confidence <= 1:
            raise ValueError("min_confidence must be in [0, 1]")


@dataclass(frozen=True)
class CorrectedPole:
    """Fusion outcome for one prediction; alpha weights the prediction,
    beta weights the reference corner (0 when no corner matched)."""

    refined: Point2
    original: Point2
    reference: Optional[Point2]
    alpha: float
    beta: float
    low_confidence: bool = False


def nearest_corner_within(
    p: Point2, corners: CornerSet, delta: float
) -> Optional[CornerPoint]:
    """Closest corner with distance <= delta, or None if the disk is empty.

    Distance ties go to the higher response, then to row-major position.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    best = None
    best_key = None
    for c in corners.corners:
        d = math.hypot(c.position.x - p.x, c.position.y - p.y)
        if d > delta:
            continue
        key = (d, -c.response, c.position.y, c.position.x)
        if best_key is None or key < best_key:
            best, best_key = c, key
    return best


def patch_feature(img: GrayImage, p: Point2, params: CorrectionParams) -> PatchFeature:
    """Brightness histogram of the square patch around p.

    Intensities fall into `bins` equal-width bins over [0, 255]; weights
    are normalized by the patch pixel count.
    """
    patch = extract_patch(img, p, params.patch_half_size)
    idx = (patch.pixels.astype(np.int64) * params.bins) // 256
    hist = np.bincount(idx.ravel(), minlength=params.bins).astype(np.float64)
    return PatchFeature(hist / patch.pixels.size, params.patch_half_size)


def reference_feature(
    img: GrayImage,
    positive_poles: Sequence[Point2],
    negative_poles: Sequence[Point2],
    params: CorrectionParams,
) -> PatchFeature:
    """Mean patch feature over both terminal polarities, renormalized."""
    poles = list(positive_poles) + list(negative_poles)
    if not poles:
        raise NoPolesError("reference feature needs at least one pole position")
    stack = np.stack([patch_feature(img, p, params).histogram for p in poles])
    mean = stack.mean(axis=0)
    total = mean.sum()
    if total > 0:
        mean = mean / total
    return PatchFeature(mean, params.patch_half_size)


def confidence(feature: PatchFeature, reference: PatchFeature) -> float:
    """Cosine similarity of the two histograms; zero vectors score 0."""
    if feature.bins != reference.bins:
        raise BinMismatchError(f"{feature.bins} bins vs {reference.bins}")
    a = feature.histogram
    b = reference.histogram
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def fuse(p: Point2, q: Point2, alpha: float, beta: float) -> Point2:
    """Confidence-weighted mean: alpha weights p, beta weights q.

    With both weights zero the prediction p is returned unchanged.
    """
    if alpha < 0 or beta < 0:
        raise ValueError("weights must be non-negative")
    if beta == 0.0:  # includes the both-zero degenerate case
        return p
    if alpha == 0.0:
        return q
    total = alpha + beta
    return Point2((alpha * p.x + beta * q.x) / total, (alpha * p.y + beta * q.y) / total)


def correct_all(
    preds: Sequence[PolePrediction],
    corners: CornerSet,
    roi_img: GrayImage,
    ref: PatchFeature,
    params: CorrectionParams,
) -> list[CorrectedPole]:
    """Correct every prediction against the corner set (same frame).

    Per prediction: match the nearest corner within delta; score the
    patches at the prediction and at the corner against the reference;
    fuse. No corner, or both confidences under the floor, keeps the
    prediction (the latter flagged low-confidence).
    """
    out = []
    for pred in preds:
        p = pred.position
        conf_p = confidence(patch_feature(roi_img, p, params), ref)
        corner = nearest_corner_within(p, corners, params.delta)
        if corner is None:
            out.append(
                CorrectedPole(
                    refined=p,
                    original=p,
                    reference=None,
                    alpha=conf_p,
                    beta=0.0,
                    low_confidence=conf_p < params.min_confidence,
                )
            )
            continue
        q = corner.position
        conf_q = confidence(patch_feature(roi_img, q, params), ref)
        if params.alpha_from_prediction:
            alpha, beta = conf_p, conf_q
        else:
            alpha, beta = conf_q, conf_p
        if max(alpha, beta) < params.min_confidence or alpha + beta == 0.0:
            out.append(CorrectedPole(p, p, q, alpha, beta, low_confidence=True))
            continue
        out.append(CorrectedPole(fuse(p, q, alpha, beta), p, q, alpha, beta))
    return out
