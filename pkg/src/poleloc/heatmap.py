"""Dense score maps for pole regression: rendering, decoding, predictors.

Score maps live on a grid coarser than the crop by an integer stride.
Cell (u, v) covers the stride x stride pixel block starting at
(u*stride, v*stride), so its center sits at pixel (u + 0.5)*stride - 0.5;
rendering and decoding both use this mapping so they invert each other.

The network that would produce these maps in production is out of scope;
a normalized-cross-correlation template predictor exercises the pipeline
deterministically, and a file predictor ingests externally produced maps.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    ChannelCountMismatchError,
    CorruptDataError,
    DimMismatchError,
    EmptyHeatmapError,
    MissingHeatmapFileError,
    TargetOutOfBoundsError,
)
from .image import GrayImage, Point2

_HMAP_MAGIC = b"HMAP"
_HMAP_VERSION = 1


@dataclass(frozen=True)
class Heatmap:
    """Row-major float score map at a fixed stride in crop pixels."""

    values: np.ndarray
    stride: int = 4

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"expected non-empty 2D values, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("heatmap values must be finite")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


class PolePrediction(NamedTuple):
    position: Point2  # crop pixel coordinates
    score: float
    pole_index: int = 0


@dataclass(frozen=True)
class PredictorConfig:
    kind: str = "template"  # "template" or "file"
    num_poles: int = 4
    sigma: float = 2.0  # Gaussian std in heatmap cells
    stride: int = 4
    template_radius: int = 2
    score_floor: float = 0.7
    heatmap_dir: Path | None = None

    def __post_init__(self):
        if self.kind not in ("template", "file"):
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        if self.num_poles < 1:
            raise ValueError("num_poles must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def cell_center(u: float, stride: int) -> float:
    """Crop pixel coordinate of a (possibly fractional) cell coordinate."""
    return (u + 0.5) * stride - 0.5


def pixel_to_cell(x: float, stride: int) -> float:
    return (x + 0.5) / stride - 0.5


def render_gaussian(
    target: Point2, dims: tuple[int, int], stride: int = 4, sigma: float = 2.0
) -> Heatmap:
    """Unit-peak Gaussian centered on `target`, sampled on the cell grid."""
    w, h = dims
    if not (0 <= target.x < w and 0 <= target.y < h):
        raise TargetOutOfBoundsError(f"target {target} outside {w}x{h} crop")
    cw = math.ceil(w / stride)
    ch = math.ceil(h / stride)
    u_star = pixel_to_cell(target.x, stride)
    v_star = pixel_to_cell(target.y, stride)
    us = np.arange(cw, dtype=np.float64)
    vs = np.arange(ch, dtype=np.float64)
    d2 = (us[None, :] - u_star) ** 2 + (vs[:, None] - v_star) ** 2
    return Heatmap(np.exp(-d2 / (2.0 * sigma * sigma)), stride)


def mse_loss(pred: Heatmap, target: Heatmap) -> float:
    if pred.values.shape != target.values.shape:
        raise DimMismatchError(
            f"shape {pred.values.shape} vs {target.values.shape}"
        )
    diff = pred.values - target.values
    return float((diff * diff).mean())


def decode_heatmap(hm: Heatmap, pole_index: int = 0, refine: bool = True) -> PolePrediction:
    """Peak cell to crop pixels, with quarter-cell sub-pixel refinement.

    The argmax cell shifts a quarter cell along each axis toward its
    larger neighbor (no shift at borders or on ties); row-major order
    breaks argmax ties.
    """
    vals = hm.values
    if vals.size == 0:
        raise EmptyHeatmapError("cannot decode an empty heatmap")
    flat = int(np.argmax(vals))
    v, u = divmod(flat, hm.width)
    du = dv = 0.0
    if refine:
        if 0 < u < hm.width - 1:
            du = 0.25 * float(np.sign(vals[v, u + 1] - vals[v, u - 1]))
        if 0 < v < hm.height - 1:
            dv = 0.25 * float(np.sign(vals[v + 1, u] - vals[v - 1, u]))
    pos = Point2(cell_center(u + du, hm.stride), cell_center(v + dv, hm.stride))
    return PolePrediction(pos, float(vals[v, u]), pole_index)


def decode_all(heatmaps: list[Heatmap], refine: bool = True) -> list[PolePrediction]:
    return [decode_heatmap(hm, k, refine) for k, hm in enumerate(heatmaps)]


def is_low_confidence(pred: PolePrediction, cfg: PredictorConfig) -> bool:
    """A prediction whose peak never cleared the correlation floor."""
    return pred.score < cfg.score_floor


def _disk_template(radius: int) -> np.ndarray:
    """Bright disc with a 1 px edge rolloff, embedded in a 2x margin.

    The margin gives the zero-mean correlation an isotropic negative
    surround, which rejects straight intensity edges that a tight disc
    would half-match.
    """
    half = 2 * radius
    rng = np.arange(-half, half + 1, dtype=np.float64)
    dist = np.hypot(rng[None, :], rng[:, None])
    return np.clip(radius + 0.5 - dist, 0.0, 1.0)


def _ncc_map(pixels: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Zero-mean NCC of template against every window; borders scored 0."""
    th, tw = template.shape
    h, w = pixels.shape
    if h < th or w < tw:
        return np.zeros((h, w))
    img = pixels.astype(np.float64)
    t0 = template - template.mean()
    tnorm = math.sqrt(float((t0 * t0).sum()))

    oh, ow = h - th + 1, w - tw + 1
    num = np.zeros((oh, ow))
    for k in range(th):
        for l in range(tw):
            c = t0[k, l]
            if c != 0.0:
                num += c * img[k : k + oh, l : l + ow]

    def valid_sums(a: np.ndarray) -> np.ndarray:
        ii = np.zeros((h + 1, w + 1))
        ii[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
        return ii[th:, tw:] - ii[:-th, tw:] - ii[th:, :-tw] + ii[:-th, :-tw]

    n = th * tw
    wsum = valid_sums(img)
    wvar = valid_sums(img * img) - wsum * wsum / n
    denom = np.sqrt(np.clip(wvar, 0.0, None)) * tnorm
    scores = np.zeros((oh, ow))
    np.divide(num, denom, out=scores, where=denom > 1e-9)

    full = np.zeros((h, w))
    full[th // 2 : th // 2 + oh, tw // 2 : tw // 2 + ow] = np.clip(scores, 0.0, None)
    return full


def _avg_pool(full: np.ndarray, stride: int) -> np.ndarray:
    h, w = full.shape
    ch = math.ceil(h / stride)
    cw = math.ceil(w / stride)
    padded = np.pad(
        full, ((0, ch * stride - h), (0, cw * stride - w)), mode="edge"
    )
    return padded.reshape(ch, stride, cw, stride).mean(axis=(1, 3))


def _suppress(cells: np.ndarray, peaks: list[tuple[int, int]], radius: float) -> np.ndarray:
    out = cells.copy()
    ch, cw = cells.shape
    vs = np.arange(ch)[:, None]
    us = np.arange(cw)[None, :]
    for pv, pu in peaks:
        out[(vs - pv) ** 2 + (us - pu) ** 2 <= radius * radius] = 0.0
    return out


def predict(img: GrayImage, cfg: PredictorConfig, stem: str | None = None) -> list[Heatmap]:
    """K heatmap channels for a crop, per the configured predictor.

    template: one pooled NCC score map against a bright-disc template,
    replicated per channel with the previously taken peaks suppressed
    (suppression radius 2*sigma*stride pixels, greedy order).
    file: channels read from <heatmap_dir>/<stem>.hmap.
    """
    if cfg.kind == "file":
        if stem is None:
            raise ValueError("file predictor needs the image stem")
        directory = cfg.heatmap_dir or Path(".")
        path = Path(directory) / f"{stem}.hmap"
        if not path.exists():
            raise MissingHeatmapFileError(str(path))
        heatmaps = read_heatmaps(path)
        if len(heatmaps) != cfg.num_poles:
            raise ChannelCountMismatchError(
                f"{path}: {len(heatmaps)} channels, expected {cfg.num_poles}"
            )
        return heatmaps

    # Correlations under the floor are background (edges, sheet texture,
    # noise); zeroing them keeps pooled pole peaks on top regardless of
    # how the peak straddles the pooling grid.
    ncc = _ncc_map(img.pixels, _disk_template(cfg.template_radius))
    ncc[ncc < cfg.score_floor] = 0.0
    shared = _avg_pool(ncc, cfg.stride)
    radius_cells = 2.0 * cfg.sigma  # 2*sigma*stride px on the cell grid
    channels: list[Heatmap] = []
    peaks: list[tuple[int, int]] = []
    for _ in range(cfg.num_poles):
        cells = _suppress(shared, peaks, radius_cells)
        flat = int(np.argmax(cells))
        peaks.append(divmod(flat, cells.shape[1]))
        channels.append(Heatmap(cells, cfg.stride))
    return channels


def write_heatmaps(path: str | Path, heatmaps: list[Heatmap]) -> None:
    """Serialize channels to the sidecar format.

    Layout: magic "HMAP", version u8, then little-endian u32 channel
    count, width, height, stride, then all channels' float32 values,
    row-major within each channel.
    """
    if not heatmaps:
        raise ValueError("need at least one channel")
    first = heatmaps[0]
    for hm in heatmaps:
        if (hm.width, hm.height, hm.stride) != (first.width, first.height, first.stride):
            raise DimMismatchError("channels must share dims and stride")
    header = _HMAP_MAGIC + struct.pack(
        "<BIIII", _HMAP_VERSION, len(heatmaps), first.width, first.height, first.stride
    )
    body = np.stack([hm.values for hm in heatmaps]).astype("<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_heatmaps(path: str | Path) -> list[Heatmap]:
    raw = Path(path).read_bytes()
    head = len(_HMAP_MAGIC) + struct.calcsize("<BIIII")
    if len(raw) < head or raw[:4] != _HMAP_MAGIC:
        raise CorruptDataError(f"{path}: not a heatmap sidecar file")
    version, k, w, h, stride = struct.unpack("<BIIII", raw[4:head])
    if version != _HMAP_VERSION:
        raise CorruptDataError(f"{path}: unsupported version {version}")
    expected = head + 4 * k * w * h
    if len(raw) != expected:
        raise CorruptDataError(f"{path}: expected {expected} bytes, got {len(raw)}")
    flat = np.frombuffer(raw[head:], dtype="<f4").astype(np.float64)
    cube = flat.reshape(k, h, w)
    return [Heatmap(cube[i], stride) for i in range(k)]
