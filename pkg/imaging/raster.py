from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from utils.errors import ArgumentError

# (x, y, w, h) in pixels; x is the column, y the row
Rect = Tuple[int, int, int, int]


def round_half_up(values: np.ndarray) -> np.ndarray:
    """Round to the nearest integer, halves going up (bit-exact on every platform)."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


def to_gray_pixels(values: np.ndarray) -> np.ndarray:
    """Round-half-up then clamp to [0, 255] as uint8."""
    return np.clip(round_half_up(values), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class RadianceImage:
    """Relative radiance per pixel before quantisation."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise ArgumentError("radiance image must be a non-empty 2-D array")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ArgumentError("radiance values must be finite and nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster, the acquisition product.

    `valid` is an optional boolean mask marking pixels that carry source data
    (set by warping; None means every pixel is valid).
    """

    pixels: np.ndarray
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.size == 0:
            raise ArgumentError("gray image must be a non-empty 2-D array")
        if pixels.dtype != np.uint8:
            if np.any(pixels < 0) or np.any(pixels > 255) or np.any(pixels != np.floor(pixels)):
                raise ArgumentError("gray values must be integers in [0, 255]")
            pixels = pixels.astype(np.uint8)
        object.__setattr__(self, "pixels", pixels)
        if self.valid is not None:
            valid = np.asarray(self.valid, dtype=bool)
            if valid.shape != pixels.shape:
                raise ArgumentError("validity mask shape does not match the image")
            object.__setattr__(self, "valid", valid)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)


def check_rect(rect: Rect, width: int, height: int) -> Rect:
    """Return the rect as ints, raising ArgumentError when empty or out of bounds."""
    if len(rect) != 4:
        raise ArgumentError(f"rect must have 4 entries, got {rect!r}")
    x, y, w, h = (int(v) for v in rect)
    if w <= 0 or h <= 0:
        raise ArgumentError(f"empty rect {rect!r}")
    if x < 0 or y < 0 or x + w > width or y + h > height:
        raise ArgumentError(f"rect {rect!r} outside {width}x{height} image")
    return x, y, w, h


def rect_slice(rect: Rect) -> Tuple[slice, slice]:
    x, y, w, h = rect
    return slice(y, y + h), slice(x, x + w)


def shrink_rect(rect: Rect, margin: int) -> Rect:
    """Rect shrunk by `margin` pixels on every side (never below 1x1)."""
    x, y, w, h = rect
    m_x = min(margin, (w - 1) // 2)
    m_y = min(margin, (h - 1) // 2)
    return x + m_x, y + m_y, w - 2 * m_x, h - 2 * m_y
