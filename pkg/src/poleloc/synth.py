"""Deterministic synthetic radiograph generator with exact ground truth.

Samples mimic a battery-cell exposure: a dark field, a horizontal band of
stacked bright/dark stripes (overlapping sheets), and bright terminal
blobs near the band ends. Every sample is a pure function of (seed,
index) via PCG64 seeded through SeedSequence((seed, index)), so datasets
are bit-reproducible across runs and platforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import SpecInfeasibleError
from .heatmap import PolePrediction, cell_center, pixel_to_cell
from .image import GrayImage, Point2, save_image
from .roi import Roi

POSITIVE = "positive"
NEGATIVE = "negative"

# Band width relative to band height; keeps end poles inside the crop
# that the default width factor (0.75 * height) produces.
_BAND_ASPECT = 1.40
_POLE_X_FRACTION = 0.50  # pole x offset from band center, in band heights
_POLE_JITTER = 2.0


@dataclass(frozen=True)
class CellSpec:
    image_dims: tuple[int, int] = (256, 192)  # (W, H)
    num_poles: int = 4
    pole_radius: tuple[float, float] = (3.0, 4.5)
    band_vertical_extent: tuple[float, float] = (0.42, 0.52)  # fraction of H
    layer_count: int = 9
    noise_sigma: float = 4.0
    background_brightness: tuple[int, int] = (10, 26)
    foreground_brightness: tuple[int, int] = (70, 150)
    seed: int = 0

    def __post_init__(self):
        if self.num_poles < 1:
            raise ValueError("num_poles must be >= 1")
        if self.layer_count < 1:
            raise ValueError("layer_count must be >= 1")
        for lo, hi in (
            self.pole_radius,
            self.band_vertical_extent,
            self.background_brightness,
            self.foreground_brightness,
        ):
            if hi < lo:
                raise ValueError("ranges must be (low, high) with low <= high")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


class LabeledPole(NamedTuple):
    position: Point2
    polarity: str


@dataclass(frozen=True)
class LabeledSample:
    image: GrayImage
    poles: tuple[LabeledPole, ...]
    true_roi: Roi


def pole_blob_value(peak: float, sigma: float, dx: float, dy: float) -> float:
    """Radial intensity profile of a terminal blob at offset (dx, dy)."""
    return peak * math.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))


def composite_pole(
    under: np.ndarray, peak: float, sigma: float, dx: np.ndarray, dy: np.ndarray
) -> np.ndarray:
    """Blend a terminal blob over the sheet background.

    The blend weight decays slower than the blob itself, so the blob's
    dim tail displaces the (often brighter) stripes and the terminal
    reads as a bright core inside a darker surround, as a denser tab
    does in a radiograph.
    """
    r2 = dx * dx + dy * dy
    blob = peak * np.exp(-r2 / (2.0 * sigma * sigma))
    weight = np.exp(-r2 / (2.0 * (2.0 * sigma) ** 2))
    return (1.0 - weight) * under + weight * blob


def _pole_slots(k: int) -> list[tuple[int, int, int]]:
    """(side, slot_index, slots_on_side) per pole; side 0 left, 1 right."""
    n_left = (k + 1) // 2
    n_right = k - n_left
    slots = [(0, j, n_left) for j in range(n_left)]
    slots += [(1, j, n_right) for j in range(n_right)]
    return slots


def generate_sample(spec: CellSpec, index: int) -> LabeledSample:
    """Render sample `index`; deterministic in (spec.seed, index)."""
    w, h = spec.image_dims
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((spec.seed, index))))

    bg_lo, bg_hi = spec.background_brightness
    fg_lo, fg_hi = spec.foreground_brightness
    bg = float(rng.integers(bg_lo, bg_hi + 1))
    canvas = np.full((h, w), bg, dtype=np.float64)

    band_h = int(round(rng.uniform(*spec.band_vertical_extent) * h))
    band_w = int(round(_BAND_ASPECT * band_h))
    if band_h < 12 or band_w > w - 12 or band_h > h - 12:
        raise SpecInfeasibleError(
            f"band {band_w}x{band_h} does not fit {w}x{h} with margins"
        )
    cy = h / 2.0 + rng.uniform(-0.05, 0.05) * h
    cx = w / 2.0 + rng.uniform(-0.04, 0.04) * w
    top = int(round(cy - band_h / 2.0))
    left = int(round(cx - band_w / 2.0))
    top = max(6, min(h - 6 - band_h, top))
    left = max(6, min(w - 6 - band_w, left))
    bottom, right = top + band_h, left + band_w

    # Stacked sheets: alternating stripe intensities across the band. The
    # band's left/right ends fade over a few columns, as sheet edges do in
    # an exposure; top/bottom stay sharp so the row profile steps there.
    span = fg_hi - fg_lo
    low_val = rng.uniform(fg_lo, fg_lo + 0.3 * span)
    high_val = rng.uniform(fg_hi - 0.3 * span, fg_hi)
    edges = np.linspace(top, bottom, spec.layer_count + 1).round().astype(int)
    band = np.empty((band_h, band_w), dtype=np.float64)
    for i in range(spec.layer_count):
        value = (high_val if i % 2 == 0 else low_val) + rng.uniform(-4.0, 4.0)
        band[edges[i] - top : edges[i + 1] - top, :] = value
    feather = min(8, band_w // 4)
    ramp = np.ones(band_w)
    ramp[:feather] = (np.arange(feather) + 0.5) / feather
    ramp[band_w - feather :] = ramp[:feather][::-1]
    canvas[top:bottom, left:right] = bg + (band - bg) * ramp[None, :]

    # Terminal blobs near the band ends, polarity by side.
    pole_dx = _POLE_X_FRACTION * band_h
    band_cx = left + band_w / 2.0
    poles = []
    for side, j, per_side in _pole_slots(spec.num_poles):
        px = band_cx + (pole_dx if side else -pole_dx)
        py = top + band_h * (j + 1) / (per_side + 1)
        px += rng.uniform(-_POLE_JITTER, _POLE_JITTER)
        py += rng.uniform(-_POLE_JITTER, _POLE_JITTER)
        radius = rng.uniform(*spec.pole_radius)
        if side == 0:
            polarity, peak = POSITIVE, rng.uniform(215.0, 235.0)
        else:
            polarity, peak = NEGATIVE, rng.uniform(180.0, 200.0)
        margin = radius + 6.0
        if not (
            left + margin <= px <= right - margin
            and top + margin <= py <= bottom - margin
        ):
            raise SpecInfeasibleError(
                f"pole at ({px:.1f}, {py:.1f}) does not fit the band"
            )
        sigma = radius / 1.8
        reach = int(math.ceil(6.0 * sigma))
        x0, x1 = max(0, int(px) - reach), min(w, int(px) + reach + 1)
        y0, y1 = max(0, int(py) - reach), min(h, int(py) + reach + 1)
        ys, xs = np.mgrid[y0:y1, x0:x1]
        canvas[y0:y1, x0:x1] = composite_pole(
            canvas[y0:y1, x0:x1], peak, sigma, xs - px, ys - py
        )
        poles.append(LabeledPole(Point2(float(px), float(py)), polarity))

    if spec.noise_sigma > 0:
        canvas = canvas + rng.normal(0.0, spec.noise_sigma, (h, w))
    pixels = np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8)

    return LabeledSample(
        image=GrayImage(pixels),
        poles=tuple(poles),
        true_roi=Roi(top=top, bottom=bottom, left=left, right=right),
    )


def sample_name(index: int) -> str:
    return f"sample_{index:04d}"


def generate_dataset(
    spec: CellSpec, n: int, out_dir: str | Path | None = None
) -> list[LabeledSample]:
    """Generate n samples; with out_dir, also write PNGs and a manifest."""
    if n < 1:
        raise ValueError("n must be >= 1")
    samples = [generate_sample(spec, i) for i in range(n)]
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "images").mkdir(parents=True, exist_ok=True)
        entries = []
        for i, s in enumerate(samples):
            rel = f"images/{sample_name(i)}.png"
            save_image(s.image, out_dir / rel)
            entries.append(
                {
                    "image": rel,
                    "poles": [
                        {"x": p.position.x, "y": p.position.y, "polarity": p.polarity}
                        for p in s.poles
                    ],
                    "roi": {
                        "top": s.true_roi.top,
                        "bottom": s.true_roi.bottom,
                        "left": s.true_roi.left,
                        "right": s.true_roi.right,
                    },
                }
            )
        manifest = out_dir / "manifest.json"
        manifest.write_text(json.dumps(entries, indent=2) + "\n")
    return samples


def load_manifest(path: str | Path) -> list[dict]:
    path = Path(path)
    entries = json.loads(path.read_text())
    if not isinstance(entries, list):
        raise ValueError(f"{path}: manifest must be a JSON array")
    return entries


def degrade_predictions(
    truth: Sequence[Point2],
    mode: str,
    *,
    stride: int = 4,
    sigma: float = 1.0,
    offset: tuple[float, float] = (0.0, 0.0),
    seed: int = 0,
) -> list[PolePrediction]:
    """Simulate imperfect regression output from exact positions.

    quantize: snap to the stride-grid cell centers (argmax-only decoding).
    jitter: add Gaussian noise with the given std per axis.
    bias: add a constant offset.
    """
    if not truth:
        raise ValueError("need at least one position")
    if mode == "quantize":
        pts = [
            Point2(
                cell_center(math.floor(pixel_to_cell(p.x, stride) + 0.5), stride),
                cell_center(math.floor(pixel_to_cell(p.y, stride) + 0.5), stride),
            )
            for p in truth
        ]
    elif mode == "jitter":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        noise = rng.normal(0.0, sigma, (len(truth), 2)) if sigma > 0 else np.zeros((len(truth), 2))
        pts = [Point2(p.x + n[0], p.y + n[1]) for p, n in zip(truth, noise)]
    elif mode == "bias":
        pts = [Point2(p.x + offset[0], p.y + offset[1]) for p in truth]
    else:
        raise ValueError(f"unknown degradation mode {mode!r}")
    return [PolePrediction(p, 1.0, i) for i, p in enumerate(pts)]
