"""Grayscale image container, patch extraction, affine warps, and file I/O.

Images are 8-bit single-channel rasters held immutably in a NumPy array;
all arithmetic on them is done in floating point by the consumers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptDataError, UnsupportedFormatError

# ITU-R 601 luma coefficients used for RGB -> gray conversion.
_LUMA = (0.299, 0.587, 0.114)


class Point2(NamedTuple):
    """Sub-pixel image location, x = column, y = row."""

    x: float
    y: float


def round_half_away(v: float) -> int:
    """Round half away from zero. Single rounding rule used package-wide."""
    return int(math.floor(v + 0.5)) if v >= 0 else -int(math.floor(-v + 0.5))


@dataclass(frozen=True)
class AffineParams:
    """Forward transform: reflect, then scale, then rotate, then translate.

    Rotation is in radians about the image center ((W-1)/2, (H-1)/2) and
    turns the +x axis toward +y (rows grow downward). Reflection flips x
    about the center.
    """

    rotation: float = 0.0
    scale: float = 1.0
    translation: tuple[float, float] = (0.0, 0.0)
    reflect_horizontal: bool = False

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")


@dataclass(frozen=True)
class GrayImage:
    """Immutable 2D grayscale raster, row-major uint8 pixels."""

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"expected a non-empty 2D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)


def _to_gray(arr: np.ndarray) -> np.ndarray:
    if arr.ndim == 2:
        return arr
    # Integer luma approximation; floor(x + 0.5) rounds half up.
    rgb = arr[..., :3].astype(np.float64)
    luma = rgb[..., 0] * _LUMA[0] + rgb[..., 1] * _LUMA[1] + rgb[..., 2] * _LUMA[2]
    return np.floor(luma + 0.5).astype(np.uint8)


def load_image(path: str | Path) -> GrayImage:
    """Load an 8-bit PGM (P5) or PNG (grayscale or RGB) as a GrayImage.

    Multi-channel inputs are reduced with the rounded 0.299/0.587/0.114
    luma approximation. 16-bit and paletted-with-alpha inputs are rejected.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    try:
        with Image.open(path) as im:
            if im.format not in ("PPM", "PNG"):
                raise UnsupportedFormatError(
                    f"{path}: unsupported format {im.format!r} (need PGM or PNG)"
                )
            if im.mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise UnsupportedFormatError(f"{path}: only 8-bit images are supported")
            if im.mode == "P":
                im = im.convert("RGB")
            if im.mode == "RGBA":
                im = im.convert("RGB")
            if im.mode not in ("L", "RGB"):
                raise UnsupportedFormatError(f"{path}: unsupported mode {im.mode!r}")
            arr = np.asarray(im)
    except UnidentifiedImageError as exc:
        raise CorruptDataError(f"{path}: cannot decode image") from exc
    except (OSError, SyntaxError) as exc:
        raise CorruptDataError(f"{path}: truncated or corrupt data") from exc
    return GrayImage(_to_gray(arr))


def save_image(img: GrayImage, path: str | Path) -> None:
    """Write a GrayImage as PNG or PGM, chosen by file extension."""
    path = Path(path)
    pil = Image.fromarray(img.pixels, mode="L")
    if path.suffix.lower() in (".pgm", ".ppm"):
        pil.save(path, format="PPM")
    else:
        pil.save(path, format="PNG")


def extract_patch(img: GrayImage, center: Point2, half_size: int) -> GrayImage:
    """Square (2*half_size+1)^2 patch around `center`, edge-clamped.

    The center is rounded to the nearest integer pixel; samples falling
    outside the image replicate the border, so every center is valid.
    """
    if half_size < 1:
        raise ValueError(f"half_size must be >= 1, got {half_size}")
    cx = round_half_away(center.x)
    cy = round_half_away(center.y)
    h, w = img.pixels.shape
    ys = np.clip(np.arange(cy - half_size, cy + half_size + 1), 0, h - 1)
    xs = np.clip(np.arange(cx - half_size, cx + half_size + 1), 0, w - 1)
    return GrayImage(img.pixels[np.ix_(ys, xs)])


def _forward_matrix(params: AffineParams) -> tuple[np.ndarray, np.ndarray]:
    """2x2 linear part and translation of the forward map about the origin."""
    c, s = math.cos(params.rotation), math.sin(params.rotation)
    # Snap to exact values at multiples of pi/2 so symmetry cases are exact.
    if abs(c) < 1e-12:
        c = 0.0
    if abs(s) < 1e-12:
        s = 0.0
    if abs(abs(c) - 1.0) < 1e-12:
        c = math.copysign(1.0, c)
    if abs(abs(s) - 1.0) < 1e-12:
        s = math.copysign(1.0, s)
    rot = np.array([[c, -s], [s, c]])
    refl = np.diag([-1.0 if params.reflect_horizontal else 1.0, 1.0])
    lin = rot @ (params.scale * refl)
    t = np.asarray(params.translation, dtype=np.float64)
    return lin, t


def _bilinear_sample(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear interpolation; samples outside the raster contribute 0."""
    h, w = pixels.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    out = np.zeros(xs.shape, dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            weight = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            vals = np.zeros(xs.shape, dtype=np.float64)
            vals[valid] = pixels[yi[valid], xi[valid]]
            out += weight * vals
    return out


def affine_warp(
    img: GrayImage,
    keypoints: Sequence[Point2],
    params: AffineParams,
) -> tuple[GrayImage, list[Point2]]:
    """Warp the image and carry keypoints through the same transform.

    The raster is resampled by inverse mapping with bilinear interpolation
    about the image center; samples from outside the source fill with 0.
    Keypoints are mapped by the forward transform. Output dimensions equal
    input dimensions.
    """
    lin, t = _forward_matrix(params)
    h, w = img.pixels.shape
    center = np.array([(w - 1) / 2.0, (h - 1) / 2.0])

    inv = np.linalg.inv(lin)
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    dst = np.stack([xs.ravel() - center[0] - t[0], ys.ravel() - center[1] - t[1]])
    src = inv @ dst
    sample_x = (src[0] + center[0]).reshape(h, w)
    sample_y = (src[1] + center[1]).reshape(h, w)

    if np.array_equal(lin, np.eye(2)) and t[0] == 0.0 and t[1] == 0.0:
        warped = img.pixels.copy()  # identity stays bit-exact
    else:
        values = _bilinear_sample(img.pixels, sample_x, sample_y)
        warped = np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)

    mapped = []
    for kp in keypoints:
        v = lin @ (np.array([kp.x, kp.y]) - center) + center + t
        mapped.append(Point2(float(v[0]), float(v[1])))
    return GrayImage(warped), mapped
