"""Histogram, edge and enhancement operations on 8-bit channel images.

None of these functions mutate their input; every result is a new image or map.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import ndimage

from config import Config
from imaging.raster import GrayImage, Rect, check_rect, rect_slice, to_gray_pixels
from utils.errors import ArgumentError

logger = logging.getLogger(__name__)

LEVELS = 256

# overlay states
NONE, NIR_ONLY, VIS_ONLY, BOTH = 0, 1, 2, 3
STATE_NAMES = {NIR_ONLY: "nir_only", VIS_ONLY: "vis_only", BOTH: "both"}
# black edges for NIR (drawn over VIS), gray for VIS-only, white background
OVERLAY_LEVELS = {NONE: 255, VIS_ONLY: 128, NIR_ONLY: 0, BOTH: 0}

# (dy, dx) toward the forward NMS neighbour for each quantised gradient direction
_NMS_OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1))


@dataclass(frozen=True)
class Histogram:
    bins: np.ndarray
    total: int

    def mean(self) -> float:
        return float(np.dot(np.arange(LEVELS), self.bins) / self.total)

    def std(self) -> float:
        levels = np.arange(LEVELS)
        mu = self.mean()
        return float(math.sqrt(np.dot((levels - mu) ** 2, self.bins) / self.total))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"value": np.arange(LEVELS), "count": self.bins})


@dataclass(frozen=True)
class EdgeMap:
    mask: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.mask.shape

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    def count(self, region: Optional[Rect] = None) -> int:
        if region is None:
            return int(np.count_nonzero(self.mask))
        rows, cols = rect_slice(check_rect(region, self.width, self.height))
        return int(np.count_nonzero(self.mask[rows, cols]))


@dataclass(frozen=True)
class OverlayMap:
    states: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.states.shape


def histogram(img: GrayImage) -> Histogram:
    bins = np.bincount(img.pixels.ravel(), minlength=LEVELS).astype(np.int64)
    return Histogram(bins=bins, total=int(img.pixels.size))


def region_stats(img: GrayImage, rect: Optional[Rect] = None) -> Dict[str, float]:
    """Population mean, std, min and max over `rect` (whole image when None)."""
    if rect is None:
        values = img.as_float()
    else:
        rows, cols = rect_slice(check_rect(rect, img.width, img.height))
        values = img.as_float()[rows, cols]
    return {
        "mean": float(values.mean()),
        "std": float(values.std()),
        "min": float(values.min()),
        "max": float(values.max()),
    }


def _equalization_lut(counts: np.ndarray, present: np.ndarray) -> Optional[np.ndarray]:
    """255 * (cdf - cdf_min) / (N - cdf_min) with cdf_min taken at the lowest present level."""
    cdf = np.cumsum(counts, dtype=np.float64)
    total = cdf[-1]
    cdf_min = cdf[np.flatnonzero(present)[0]]
    if total - cdf_min <= 0:
        return None
    return np.clip(255.0 * (cdf - cdf_min) / (total - cdf_min), 0.0, 255.0)


def equalize_global(img: GrayImage) -> GrayImage:
    hist = histogram(img)
    lut = _equalization_lut(hist.bins, hist.bins > 0)
    if lut is None:
        return GrayImage(img.pixels.copy())
    return GrayImage(to_gray_pixels(lut)[img.pixels])


def equalize_local(img: GrayImage, tile: int = Config.CLAHE_TILE, clip_limit: float = Config.CLAHE_CLIP) -> GrayImage:
    """Contrast-limited tile equalisation with bilinear blending between tile centres.

    `clip_limit` is the largest share of a tile's pixels one gray level may hold;
    the clipped excess is spread evenly over all levels. Falls back to
    equalize_global when the tile does not fit in the image.
    """
    if tile < 8:
        raise ArgumentError(f"tile must be >= 8 pixels, got {tile}")
    if not 0.0 < clip_limit <= 1.0:
        raise ArgumentError(f"clip_limit must lie in (0, 1], got {clip_limit}")
    h, w = img.shape
    if tile > h or tile > w:
        logger.debug(f"tile {tile} exceeds {w}x{h} image, using global equalisation")
        return equalize_global(img)

    pixels = img.pixels
    n_ty = math.ceil(h / tile)
    n_tx = math.ceil(w / tile)
    luts = np.empty((n_ty, n_tx, LEVELS), dtype=np.float64)
    identity = np.arange(LEVELS, dtype=np.float64)
    for ty in range(n_ty):
        for tx in range(n_tx):
            block = pixels[ty * tile:(ty + 1) * tile, tx * tile:(tx + 1) * tile]
            counts = np.bincount(block.ravel(), minlength=LEVELS).astype(np.float64)
            present = counts > 0
            if np.count_nonzero(present) == 1:
                luts[ty, tx] = identity
                continue
            limit = clip_limit * block.size
            excess = np.clip(counts - limit, 0.0, None).sum()
            if excess > 0:
                counts = np.minimum(counts, limit) + excess / LEVELS
            lut = _equalization_lut(counts, present)
            luts[ty, tx] = identity if lut is None else lut

    def blend_axis(size: int, n_tiles: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = np.clip((np.arange(size) + 0.5) / tile - 0.5, 0.0, n_tiles - 1)
        lo = np.minimum(np.floor(pos).astype(np.int64), max(n_tiles - 2, 0))
        hi = np.minimum(lo + 1, n_tiles - 1)
        return lo, hi, pos - lo

    y0, y1, fy = blend_axis(h, n_ty)
    x0, x1, fx = blend_axis(w, n_tx)
    fy = fy[:, None]
    fx = fx[None, :]
    top = luts[y0[:, None], x0[None, :], pixels] * (1.0 - fx) + luts[y0[:, None], x1[None, :], pixels] * fx
    bottom = luts[y1[:, None], x0[None, :], pixels] * (1.0 - fx) + luts[y1[:, None], x1[None, :], pixels] * fx
    return GrayImage(to_gray_pixels(top * (1.0 - fy) + bottom * fy))


def _nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    n = sorted_values.size
    rank = min(max(math.ceil(p / 100.0 * n), 1), n)
    return float(sorted_values[rank - 1])


def contrast_stretch(
    img: GrayImage, p_low: float = Config.STRETCH_LOW, p_high: float = Config.STRETCH_HIGH
) -> GrayImage:
    """Linear map sending the p_low percentile to 0 and p_high to 255 (nearest-rank percentiles)."""
    if not 0.0 <= p_low < p_high <= 100.0:
        raise ArgumentError(f"need 0 <= p_low < p_high <= 100, got ({p_low}, {p_high})")
    ordered = np.sort(img.pixels.ravel())
    lo = _nearest_rank(ordered, p_low)
    hi = _nearest_rank(ordered, p_high)
    if hi <= lo:
        return GrayImage(img.pixels.copy())
    return GrayImage(to_gray_pixels((img.as_float() - lo) * 255.0 / (hi - lo)))


def homomorphic_transfer(shape: Tuple[int, int], cutoff: float, gamma_low: float, gamma_high: float,
                         image_shape: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """High-emphasis Gaussian transfer on an FFT grid of `shape`, frequencies in cycles per image."""
    image_h, image_w = image_shape or shape
    fy = np.fft.fftfreq(shape[0]) * image_h
    fx = np.fft.fftfreq(shape[1]) * image_w
    f2 = fy[:, None] ** 2 + fx[None, :] ** 2
    return gamma_low + (gamma_high - gamma_low) * (1.0 - np.exp(-f2 / (2.0 * cutoff * cutoff)))


def homomorphic_log_response(img: GrayImage, cutoff: float, gamma_low: float, gamma_high: float) -> np.ndarray:
    """log1p(img) passed through the high-emphasis transfer, before the inverse log."""
    if cutoff <= 0:
        raise ArgumentError(f"cutoff must be positive, got {cutoff}")
    if not 0.0 < gamma_low <= 1.0 <= gamma_high:
        raise ArgumentError(f"need 0 < gamma_low <= 1 <= gamma_high, got ({gamma_low}, {gamma_high})")
    h, w = img.shape
    log_img = np.log1p(img.as_float())
    pad_y, pad_x = h // 2, w // 2
    padded = np.pad(log_img, ((pad_y, pad_y), (pad_x, pad_x)), mode="symmetric")
    transfer = homomorphic_transfer(padded.shape, cutoff, gamma_low, gamma_high, image_shape=(h, w))
    return np.real(np.fft.ifft2(np.fft.fft2(padded) * transfer))[pad_y:pad_y + h, pad_x:pad_x + w]


def homomorphic_filter(
    img: GrayImage,
    cutoff: float = Config.HOMOMORPHIC_CUTOFF,
    gamma_low: float = Config.HOMOMORPHIC_GAMMA_LOW,
    gamma_high: float = Config.HOMOMORPHIC_GAMMA_HIGH,
) -> GrayImage:
    """Suppress slow illumination and emphasise reflectance detail in the log domain.

    The result is rescaled so its maximum matches the input maximum.
    """
    filtered = homomorphic_log_response(img, cutoff, gamma_low, gamma_high)
    out = np.clip(np.expm1(filtered), 0.0, None)

    in_max = float(img.pixels.max())
    out_max = float(out.max())
    if out_max > 0:
        out = out * (in_max / out_max)
    return GrayImage(to_gray_pixels(out))


def enhance(img: GrayImage, method: str, **params) -> GrayImage:
    methods = {
        "equalize": equalize_global,
        "clahe": equalize_local,
        "stretch": contrast_stretch,
        "homomorphic": homomorphic_filter,
    }
    if method not in methods:
        raise ArgumentError(f"unknown enhancement '{method}' (expected one of {sorted(methods)})")
    return methods[method](img, **params)


def gradients(img: GrayImage, sigma: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sobel gradients (gx, gy) of the Gaussian-smoothed image and their magnitude."""
    data = img.as_float()
    if sigma > 0:
        data = ndimage.gaussian_filter(data, sigma, mode="nearest")
    gx = ndimage.sobel(data, axis=1, mode="nearest")
    gy = ndimage.sobel(data, axis=0, mode="nearest")
    return gx, gy, np.hypot(gx, gy)


def _direction_bins(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    return np.select(
        [(angle >= 22.5) & (angle < 67.5), (angle >= 67.5) & (angle < 112.5), (angle >= 112.5) & (angle < 157.5)],
        [1, 2, 3],
        default=0,
    )


def _non_max_suppression(mag: np.ndarray, bins: np.ndarray) -> np.ndarray:
    h, w = mag.shape
    keep = np.zeros((h, w), dtype=bool)
    if h < 3 or w < 3:
        return keep
    centre = mag[1:-1, 1:-1]
    inner_bins = bins[1:-1, 1:-1]
    for index, (dy, dx) in enumerate(_NMS_OFFSETS):
        forward = mag[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        backward = mag[1 - dy:h - 1 - dy, 1 - dx:w - 1 - dx]
        keep[1:-1, 1:-1] |= (inner_bins == index) & (centre >= forward) & (centre > backward)
    return keep


def canny(
    img: GrayImage, sigma: float = Config.CANNY_SIGMA, t_low: float = Config.CANNY_LOW, t_high: float = Config.CANNY_HIGH
) -> EdgeMap:
    """Gaussian smoothing, Sobel gradients, 4-direction NMS, 8-connected hysteresis."""
    if sigma < 0:
        raise ArgumentError(f"sigma must be >= 0, got {sigma}")
    if not 0 < t_low < t_high:
        raise ArgumentError(f"need 0 < t_low < t_high, got ({t_low}, {t_high})")
    gx, gy, mag = gradients(img, sigma)
    thin = _non_max_suppression(mag, _direction_bins(gx, gy))
    weak = thin & (mag >= t_low)
    strong = weak & (mag >= t_high)
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    seeds = np.unique(labels[strong])
    return EdgeMap(np.isin(labels, seeds[seeds > 0]))


def edge_overlay(nir: EdgeMap, vis: EdgeMap) -> OverlayMap:
    if nir.shape != vis.shape:
        raise ArgumentError(f"edge maps differ in size: {nir.shape} vs {vis.shape}")
    states = nir.mask.astype(np.uint8) * NIR_ONLY + vis.mask.astype(np.uint8) * VIS_ONLY
    return OverlayMap(states)


def edge_counts(overlay: OverlayMap, region: Optional[Rect] = None) -> Dict[str, int]:
    states = overlay.states
    if region is not None:
        height, width = overlay.shape
        rows, cols = rect_slice(check_rect(region, width, height))
        states = states[rows, cols]
    return {name: int(np.count_nonzero(states == code)) for code, name in STATE_NAMES.items()}


def overlay_to_gray(overlay: OverlayMap) -> GrayImage:
    lut = np.zeros(4, dtype=np.uint8)
    for code, level in OVERLAY_LEVELS.items():
        lut[code] = level
    return GrayImage(lut[overlay.states])


def edge_to_gray(edges: EdgeMap) -> GrayImage:
    return GrayImage(np.where(edges.mask, 0, 255).astype(np.uint8))
