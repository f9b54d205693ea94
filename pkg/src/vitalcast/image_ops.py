"""Raster operations for the numeric-overlay preprocessing chain.

The chain that prepares a metric readout for recognition is
crop -> resize -> sharpen -> binarize -> gaussian blur, applied to 8-bit
grayscale rasters. Every operation here is a pure function: identical input
bytes always produce identical output bytes, so pipeline artifacts are
reproducible down to the byte.

Conventions:
    * rasters are row-major ``numpy`` arrays of shape (height, width), dtype
      uint8;
    * after binarization the bright overlay text is foreground (255) and the
      dark backdrop is background (0);
    * color frames are reduced to gray with ITU-R BT.601 luma weights
      (0.299 / 0.587 / 0.114) at load time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyImage, RoiOutOfBounds

DEFAULT_DPI = 300

#: Smoothing kernel used by :func:`sharpen`. Center weight 5/13, each of the
#: eight neighbours 1/13; borders are handled by edge replication.
SHARPEN_SMOOTH_KERNEL = np.array(
    [[1.0, 1.0, 1.0],
     [1.0, 5.0, 1.0],
     [1.0, 1.0, 1.0]],
) / 13.0


@dataclass(frozen=True)
class RoiSpec:
    """Named rectangle within a frame holding one on-screen metric."""

    channel: str
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"roi {self.channel!r}: w and h must be positive, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"roi {self.channel!r}: origin must be non-negative, got ({self.x},{self.y})")

    def overlaps(self, other: "RoiSpec") -> bool:
        return not (
            self.x + self.w <= other.x
            or other.x + other.w <= self.x
            or self.y + self.h <= other.y
            or other.y + other.h <= self.y
        )


@dataclass
class GrayImage:
    """8-bit grayscale raster plus dpi metadata (metadata only, never resampled)."""

    pixels: np.ndarray
    dpi: float | None = None

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2:
            raise ValueError(f"expected a 2-D raster, got shape {pixels.shape}")
        if pixels.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {pixels.dtype}")
        self.pixels = pixels

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.pixels.size == 0


@dataclass
class BinaryImage:
    """Raster whose pixels are restricted to {0, 255}; 255 is foreground ink."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.dtype != np.uint8:
            raise ValueError("binary image must be a 2-D uint8 raster")
        bad = ~np.isin(pixels, (0, 255))
        if bad.any():
            raise ValueError("binary image may only contain 0 and 255")
        self.pixels = pixels

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def to_gray(self, dpi: float | None = None) -> GrayImage:
        return GrayImage(self.pixels.copy(), dpi=dpi)


@dataclass(frozen=True)
class PreprocessParams:
    """Tunables of the preprocessing chain, one field per stage."""

    resize_w: int = 90
    resize_h: int = 44
    dpi: int = DEFAULT_DPI
    sharpen_factor: float = 4.0
    binarize_method: str = "otsu"  # "otsu" | "fixed"
    fixed_threshold: int = 128
    blur_sigma: float = 0.8


def crop(img: GrayImage, roi: RoiSpec) -> GrayImage:
    """Copy the ROI rectangle out of the frame.

    Raises:
        RoiOutOfBounds: if the rectangle extends past the frame.
    """
    if roi.x + roi.w > img.width or roi.y + roi.h > img.height:
        raise RoiOutOfBounds(
            f"roi {roi.channel!r} ({roi.x},{roi.y},{roi.w}x{roi.h}) exceeds frame {img.width}x{img.height}"
        )
    out = img.pixels[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w].copy()
    return GrayImage(out, dpi=img.dpi)


def resize(img: GrayImage, w: int = 90, h: int = 44, dpi: int = DEFAULT_DPI) -> GrayImage:
    """Resample to ``w x h`` with bilinear interpolation and stamp dpi metadata.

    Sample positions use the pixel-center convention: output pixel (i, j) reads
    the source at ``(j + 0.5) * sw - 0.5`` where ``sw`` is the width ratio.
    """
    if img.is_empty:
        raise EmptyImage("cannot resize an empty image")
    if w <= 0 or h <= 0:
        raise ValueError(f"target dimensions must be positive, got {w}x{h}")
    src = img.pixels.astype(np.float64)
    ih, iw = src.shape
    xs = (np.arange(w) + 0.5) * (iw / w) - 0.5
    ys = (np.arange(h) + 0.5) * (ih / h) - 0.5
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, iw - 1)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, ih - 1)
    x1 = np.minimum(x0 + 1, iw - 1)
    y1 = np.minimum(y0 + 1, ih - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)
    top = src[np.ix_(y0, x0)] * (1.0 - fx) + src[np.ix_(y0, x1)] * fx
    bottom = src[np.ix_(y1, x0)] * (1.0 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1.0 - fy)[:, None] + bottom * fy[:, None]
    return GrayImage(_to_uint8(out), dpi=float(dpi))


def sharpen(img: GrayImage, factor: float = 4.0) -> GrayImage:
    """Unsharp interpolation ``out = img + (factor - 1) * (img - smooth(img))``.

    ``smooth`` is the fixed 3x3 kernel :data:`SHARPEN_SMOOTH_KERNEL` with edge
    replication. Factor 1 reproduces the input exactly; factor 0 yields the
    smoothed image.
    """
    if factor < 0:
        raise ValueError(f"sharpen factor must be >= 0, got {factor}")
    if img.is_empty:
        raise EmptyImage("cannot sharpen an empty image")
    src = img.pixels.astype(np.float64)
    smooth = _convolve3x3_replicate(src, SHARPEN_SMOOTH_KERNEL)
    out = src + (factor - 1.0) * (src - smooth)
    return GrayImage(_to_uint8(out), dpi=img.dpi)


def otsu_threshold(img: GrayImage) -> int:
    """Threshold maximizing between-class variance over all 256 candidates.

    A pixel is foreground when strictly greater than the returned value. Ties
    resolve to the lowest qualifying threshold.
    """
    if img.is_empty:
        raise EmptyImage("cannot threshold an empty image")
    hist = np.bincount(img.pixels.ravel(), minlength=256).astype(np.float64)
    n = hist.sum()
    count0 = np.cumsum(hist)               # pixels <= t
    sum0 = np.cumsum(hist * np.arange(256))
    count1 = n - count0
    total = sum0[-1]
    valid = (count0 > 0) & (count1 > 0)
    mean0 = np.divide(sum0, count0, out=np.zeros(256), where=count0 > 0)
    mean1 = np.divide(total - sum0, count1, out=np.zeros(256), where=count1 > 0)
    var_between = np.where(valid, (count0 / n) * (count1 / n) * (mean0 - mean1) ** 2, 0.0)
    return int(np.argmax(var_between))  # argmax takes the first (lowest) maximum


def binarize(img: GrayImage, method: str = "otsu", threshold: int = 128) -> BinaryImage:
    """Map pixels above the threshold to 255 and the rest to 0.

    With ``method="otsu"`` the threshold comes from :func:`otsu_threshold`; a
    degenerate single-value histogram yields an all-background (all 0) result.
    ``method="fixed"`` uses ``threshold`` directly.
    """
    if img.is_empty:
        raise EmptyImage("cannot binarize an empty image")
    if method == "otsu":
        if int(img.pixels.min()) == int(img.pixels.max()):
            return BinaryImage(np.zeros_like(img.pixels))
        t = otsu_threshold(img)
    elif method == "fixed":
        t = int(threshold)
    else:
        raise ValueError(f"unknown binarize method {method!r}")
    return BinaryImage(np.where(img.pixels > t, 255, 0).astype(np.uint8))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian of radius ceil(3*sigma), normalized to sum 1."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return np.array([1.0])
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img: GrayImage, sigma: float = 0.8) -> GrayImage:
    """Separable Gaussian blur with clamp-to-edge borders; sigma 0 is identity."""
    if img.is_empty:
        raise EmptyImage("cannot blur an empty image")
    if sigma == 0:
        return GrayImage(img.pixels.copy(), dpi=img.dpi)
    k = gaussian_kernel(sigma)
    radius = (len(k) - 1) // 2
    h, w = img.pixels.shape
    src = img.pixels.astype(np.float64)
    padded = np.pad(src, ((0, 0), (radius, radius)), mode="edge")
    horizontal = np.zeros_like(src)
    for i, weight in enumerate(k):
        horizontal += weight * padded[:, i : i + w]
    padded = np.pad(horizontal, ((radius, radius), (0, 0)), mode="edge")
    out = np.zeros_like(src)
    for i, weight in enumerate(k):
        out += weight * padded[i : i + h, :]
    return GrayImage(_to_uint8(out), dpi=img.dpi)


def preprocess_roi(frame: GrayImage, roi: RoiSpec, params: PreprocessParams = PreprocessParams()) -> GrayImage:
    """Run the full chain on one metric rectangle of a frame.

    Composition of crop -> resize -> sharpen -> binarize -> gaussian blur. The
    result is 8-bit grayscale; the trailing blur reintroduces intermediate
    grays around the binarized glyph edges.
    """
    cropped = crop(frame, roi)
    resized = resize(cropped, params.resize_w, params.resize_h, dpi=params.dpi)
    sharpened = sharpen(resized, params.sharpen_factor)
    binary = binarize(sharpened, params.binarize_method, params.fixed_threshold)
    return gaussian_blur(binary.to_gray(dpi=float(params.dpi)), params.blur_sigma)


# --- file I/O -----------------------------------------------------------------

def load_gray(path: str | Path) -> GrayImage:
    """Load a PNG (or PGM test fixture) as grayscale.

    Color inputs are reduced with BT.601 luma weights; dpi metadata is kept
    when the file carries it.
    """
    with Image.open(path) as im:
        dpi_info = im.info.get("dpi")
        gray = im.convert("L")  # Pillow's L mode uses the BT.601 weights
        pixels = np.asarray(gray, dtype=np.uint8)
    dpi = float(dpi_info[0]) if dpi_info else None
    return GrayImage(pixels.copy(), dpi=dpi)


def save_png(img: GrayImage, path: str | Path) -> None:
    """Write a grayscale PNG, embedding dpi as a pHYs chunk when set."""
    pil = Image.fromarray(img.pixels, mode="L")
    if img.dpi:
        pil.save(path, format="PNG", dpi=(img.dpi, img.dpi))
    else:
        pil.save(path, format="PNG")


def _convolve3x3_replicate(src: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    padded = np.pad(src, 1, mode="edge")
    h, w = src.shape
    out = np.zeros_like(src)
    for dy in range(3):
        for dx in range(3):
            out += kernel[dy, dx] * padded[dy : dy + h, dx : dx + w]
    return out


def _to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)
