"""Keypoint accuracy metrics and comparison-table reporting.

All errors are Euclidean distances normalized per sample by a reference
distance (the crop diagonal). Three aggregates are reported: the mean
normalized error in percent, the fraction of keypoints under a threshold,
and the stricter fraction of samples whose worst keypoint is under it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyResultsError, ThetaMismatchError
from .image import Point2

DEFAULT_THETAS = (0.005, 0.01)


@dataclass(frozen=True)
class SampleResult:
    """Matched prediction/ground-truth pairs for one image.

    Missing predictions (trailing, or None placeholders from matching)
    are scored as a full reference distance; extra predictions are
    ignored.
    """

    sample_id: str
    predictions: tuple[Optional[Point2], ...]
    ground_truth: tuple[Point2, ...]
    d_ref: float

    def __post_init__(self):
        if len(self.ground_truth) < 1:
            raise ValueError("sample needs at least one ground-truth keypoint")
        if not self.d_ref > 0:
            raise ValueError(f"d_ref must be > 0, got {self.d_ref}")
        object.__setattr__(self, "predictions", tuple(self.predictions))
        object.__setattr__(self, "ground_truth", tuple(self.ground_truth))

    def normalized_errors(self) -> np.ndarray:
        errs = np.empty(len(self.ground_truth))
        for i, gt in enumerate(self.ground_truth):
            p = self.predictions[i] if i < len(self.predictions) else None
            if p is None:
                errs[i] = 1.0
            else:
                errs[i] = math.hypot(p.x - gt.x, p.y - gt.y) / self.d_ref
        return errs


@dataclass(frozen=True)
class EvalReport:
    nme: float  # percent
    pck: dict[float, float] = field(default_factory=dict)
    pcs: dict[float, float] = field(default_factory=dict)
    n_samples: int = 0
    n_keypoints: int = 0


def _require(results: Sequence[SampleResult]) -> None:
    if not results:
        raise EmptyResultsError("no samples to evaluate")


def nme(results: Sequence[SampleResult]) -> float:
    """Mean normalized error over all samples and keypoints, in percent."""
    _require(results)
    errs = np.concatenate([r.normalized_errors() for r in results])
    return float(errs.mean() * 100.0)


def pck(results: Sequence[SampleResult], theta: float) -> float:
    """Fraction of keypoints with normalized error <= theta (inclusive)."""
    _require(results)
    if not theta > 0:
        raise ValueError("theta must be > 0")
    errs = np.concatenate([r.normalized_errors() for r in results])
    return float((errs <= theta).mean())


def pcs(results: Sequence[SampleResult], theta: float) -> float:
    """Fraction of samples whose maximum normalized error is <= theta."""
    _require(results)
    if not theta > 0:
        raise ValueError("theta must be > 0")
    worst = np.array([r.normalized_errors().max() for r in results])
    return float((worst <= theta).mean())


def evaluate(
    results: Sequence[SampleResult], thetas: Sequence[float] = DEFAULT_THETAS
) -> EvalReport:
    _require(results)
    return EvalReport(
        nme=nme(results),
        pck={t: pck(results, t) for t in thetas},
        pcs={t: pcs(results, t) for t in thetas},
        n_samples=len(results),
        n_keypoints=sum(len(r.ground_truth) for r in results),
    )


def relative_gain(baseline: EvalReport, improved: EvalReport) -> dict:
    """Per-metric improvement in percent over the baseline.

    Error metrics improve downward ((base - new) / base), accuracy
    fractions upward ((new - base) / base); a zero baseline yields None.
    """
    if set(baseline.pck) != set(improved.pck) or set(baseline.pcs) != set(improved.pcs):
        raise ThetaMismatchError("reports were evaluated at different thresholds")

    def down(base: float, new: float) -> Optional[float]:
        return None if base == 0 else (base - new) / base * 100.0

    def up(base: float, new: float) -> Optional[float]:
        return None if base == 0 else (new - base) / base * 100.0

    return {
        "nme": down(baseline.nme, improved.nme),
        "pck": {t: up(baseline.pck[t], improved.pck[t]) for t in baseline.pck},
        "pcs": {t: up(baseline.pcs[t], improved.pcs[t]) for t in baseline.pcs},
    }


def format_theta(theta: float) -> str:
    s = f"{theta * 100:g}"
    if "." not in s:
        s += ".0"
    return s + "%"


def report_to_dict(report: EvalReport) -> dict:
    return {
        "nme": report.nme,
        "pck": {f"{t:g}": v for t, v in report.pck.items()},
        "pcs": {f"{t:g}": v for t, v in report.pcs.items()},
        "n_samples": report.n_samples,
        "n_keypoints": report.n_keypoints,
    }


def format_table(
    rows: Sequence[tuple[str, EvalReport]], gain: Optional[dict] = None
) -> str:
    """Fixed-width comparison table, one row per labeled report."""
    if not rows:
        raise EmptyResultsError("nothing to tabulate")
    thetas = sorted(rows[0][1].pck)
    headers = (
        ["Method", "NME(%)"]
        + [f"PCK@{format_theta(t)}" for t in thetas]
        + [f"PCS@{format_theta(t)}" for t in thetas]
    )
    table = [headers]
    for label, rep in rows:
        table.append(
            [label, f"{rep.nme:.3f}"]
            + [f"{rep.pck[t]:.3f}" for t in thetas]
            + [f"{rep.pcs[t]:.3f}" for t in thetas]
        )
    if gain is not None:
        fmt = lambda v: "-" if v is None else f"{v:.2f}%"
        table.append(
            ["relative gain", fmt(gain["nme"])]
            + [fmt(gain["pck"][t]) for t in thetas]
            + [fmt(gain["pcs"][t]) for t in thetas]
        )
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    lines = []
    for r in table:
        cells = [r[0].ljust(widths[0])] + [
            c.rjust(widths[i + 1]) for i, c in enumerate(r[1:])
        ]
        lines.append("  ".join(cells))
    return "\n".join(lines)
