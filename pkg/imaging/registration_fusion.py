"""Cross-channel registration on the chessboard marker and weighted NIR->VIS fusion.

Homographies act on (x, y, 1) column vectors with x the column and y the row.
`warp(img, H)` resamples `img` onto the grid H maps it to, so a homography
estimated from NIR corners to VIS corners brings the NIR image onto the VIS grid.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import cv2
import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from imaging.raster import GrayImage, Rect, check_rect, rect_slice, to_gray_pixels
from utils.errors import ArgumentError, DetectionError, EstimationError, RegistrationError

logger = logging.getLogger(__name__)

DET_EPS = 1e-12
WARP_EPS = 1e-6

# corner detector tuning
HARRIS_SIGMA = 1.0
HARRIS_BLOCK = 5
HARRIS_KSIZE = 3
HARRIS_K = 0.04
RESPONSE_FRACTION = 0.1
MIN_SEPARATION = 4.0
RING_RADIUS = 4.0
RING_SAMPLES = 32
MIN_CORNER_CONTRAST = 10.0
REFINE_SIGMA = 1.0
REFINE_ITERATIONS = 30
REFINE_EPS = 0.001
MAX_CANDIDATES = 400


@dataclass(frozen=True)
class Homography:
    """Invertible 3x3 projective map, normalised so that h33 == 1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ArgumentError("homography must be a finite 3x3 matrix")
        if abs(m[2, 2]) < DET_EPS:
            raise ArgumentError("homography cannot be normalised (h33 == 0)")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= DET_EPS:
            raise ArgumentError("homography is not invertible")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        return cls(np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]]))

    @classmethod
    def from_misalignment(
        cls, tx: float, ty: float, rotation_deg: float, center: Tuple[float, float] = (0.0, 0.0)
    ) -> "Homography":
        """Rotation about `center` followed by a translation: q -> R(q - c) + c + t."""
        theta = math.radians(rotation_deg)
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        cx, cy = center
        rotation = np.array([[cos_t, -sin_t, 0.0], [sin_t, cos_t, 0.0], [0.0, 0.0, 1.0]])
        to_origin = np.array([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]])
        back = np.array([[1.0, 0.0, cx + tx], [0.0, 1.0, cy + ty], [0.0, 0.0, 1.0]])
        return cls(back @ rotation @ to_origin)

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "Homography":
        if len(values) != 9:
            raise ArgumentError(f"homography needs 9 numbers, got {len(values)}")
        return cls(np.asarray(values, dtype=np.float64).reshape(3, 3))

    def to_list(self) -> List[float]:
        return [float(v) for v in self.matrix.ravel()]

    def is_identity(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, np.eye(3), rtol=0.0, atol=tol))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def compose(self, first: "Homography") -> "Homography":
        """The map applying `first`, then self."""
        return Homography(self.matrix @ first.matrix)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        homog = np.column_stack([pts, np.ones(len(pts))]) @ self.matrix.T
        return homog[:, :2] / homog[:, 2:3]


@dataclass(frozen=True)
class CorrespondenceSet:
    """Ordered point pairs src[i] -> dst[i]."""

    src: np.ndarray
    dst: np.ndarray

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.float64).reshape(-1, 2)
        dst = np.asarray(self.dst, dtype=np.float64).reshape(-1, 2)
        if len(src) != len(dst):
            raise ArgumentError(f"correspondence sides differ in length ({len(src)} vs {len(dst)})")
        if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dst))):
            raise ArgumentError("correspondences must be finite")
        if len(np.unique(src, axis=0)) != len(src):
            raise ArgumentError("duplicated source points in correspondence set")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)

    def __len__(self) -> int:
        return len(self.src)


@dataclass(frozen=True)
class WeightMap:
    """Per-pixel fusion weights in [-1, 1].

    `selection` marks the pixels a detector picked out, independent of the weight
    they were given; without it the nonzero weights are the selection.
    """

    weights: np.ndarray
    selection: Optional[np.ndarray] = None

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 2 or weights.size == 0:
            raise ArgumentError("weight map must be a non-empty 2-D array")
        if not np.all(np.isfinite(weights)) or np.any(np.abs(weights) > 1.0):
            raise ArgumentError("weights must lie in [-1, 1]")
        object.__setattr__(self, "weights", weights)
        if self.selection is not None:
            selection = np.asarray(self.selection, dtype=bool)
            if selection.shape != weights.shape:
                raise ArgumentError(f"selection is {selection.shape}, weights are {weights.shape}")
            object.__setattr__(self, "selection", selection)

    @property
    def selected(self) -> np.ndarray:
        return self.weights != 0 if self.selection is None else self.selection

    @property
    def shape(self) -> Tuple[int, int]:
        return self.weights.shape

    @classmethod
    def zeros(cls, shape: Tuple[int, int]) -> "WeightMap":
        return cls(np.zeros(shape))


@dataclass
class RegistrationResult:
    nir_registered: GrayImage
    H_est: Homography
    fit_rms: float
    vis_corners: np.ndarray
    nir_corners: np.ndarray

    def to_dict(self) -> Dict[str, object]:
        return {
            "H_est": self.H_est.to_list(),
            "fit_rms": self.fit_rms,
            "corners": int(len(self.vis_corners)),
        }


# --- homography estimation ---------------------------------------------------

def _normalising_transform(points: np.ndarray) -> np.ndarray:
    centroid = points.mean(axis=0)
    mean_dist = np.mean(np.hypot(*(points - centroid).T))
    if mean_dist < DET_EPS:
        raise EstimationError("all points coincide")
    s = math.sqrt(2.0) / mean_dist
    return np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])


def _has_collinear_triple(points: np.ndarray) -> bool:
    extent = max(np.ptp(points[:, 0]), np.ptp(points[:, 1]), 1.0)
    for a, b, c in itertools.combinations(points, 3):
        area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(area) <= 1e-9 * extent * extent:
            return True
    return False


def _all_collinear(points: np.ndarray) -> bool:
    centred = points - points.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    return s[0] < DET_EPS or s[1] <= 1e-9 * s[0]


def estimate_homography(corr: CorrespondenceSet) -> Tuple[Homography, float]:
    """Normalised DLT; returns H with h33 == 1 and the RMS reprojection error in pixels."""
    n = len(corr)
    if n < 4:
        raise EstimationError(f"need at least 4 correspondences, got {n}")
    for side, pts in (("source", corr.src), ("destination", corr.dst)):
        if n == 4 and _has_collinear_triple(pts):
            raise EstimationError(f"three collinear {side} points in a minimal set")
        if _all_collinear(pts):
            raise EstimationError(f"{side} points are collinear")

    t_src = _normalising_transform(corr.src)
    t_dst = _normalising_transform(corr.dst)
    src = np.column_stack([corr.src, np.ones(n)]) @ t_src.T
    dst = np.column_stack([corr.dst, np.ones(n)]) @ t_dst.T

    rows = []
    for (x, y, w), (u, v, z) in zip(src, dst):
        rows.append([0.0, 0.0, 0.0, -z * x, -z * y, -z * w, v * x, v * y, v * w])
        rows.append([z * x, z * y, z * w, 0.0, 0.0, 0.0, -u * x, -u * y, -u * w])
    _, singular, vt = np.linalg.svd(np.asarray(rows))
    if len(singular) >= 8 and singular[7] <= 1e-10 * singular[0]:
        raise EstimationError("correspondences do not determine a unique homography")

    h_norm = vt[-1].reshape(3, 3)
    matrix = np.linalg.inv(t_dst) @ h_norm @ t_src
    if abs(matrix[2, 2]) < DET_EPS:
        raise EstimationError("estimated homography has h33 == 0")
    matrix = matrix / matrix[2, 2]
    if abs(np.linalg.det(matrix)) <= DET_EPS:
        raise EstimationError("estimated homography is singular")

    H = Homography(matrix)
    residual = H.apply(corr.src) - corr.dst
    rms = float(np.sqrt(np.mean(np.sum(residual * residual, axis=1))))
    return H, rms


def reprojection_rms(H_est: Homography, true_H: Homography, points: np.ndarray) -> float:
    """RMS of |H_est(true_H(q)) - q| over VIS-grid points q."""
    q = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    back = H_est.apply(true_H.apply(q))
    return float(np.sqrt(np.mean(np.sum((back - q) ** 2, axis=1))))


# --- resampling --------------------------------------------------------------

def _bilinear(values: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = values.shape
    x0 = np.clip(np.floor(xs), 0, max(w - 2, 0)).astype(np.int64)
    y0 = np.clip(np.floor(ys), 0, max(h - 2, 0)).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    top = values[y0, x0] * (1.0 - fx) + values[y0, x1] * fx
    bottom = values[y1, x0] * (1.0 - fx) + values[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def warp_array(
    values: np.ndarray,
    H: Homography,
    source_valid: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse-map `values` through H with bilinear sampling.

    Returns the resampled float array (0 outside the source) and its validity mask.
    """
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    ys, xs = np.mgrid[0:h, 0:w]
    target = np.stack([xs.ravel(), ys.ravel(), np.ones(h * w)]).astype(np.float64)
    src = np.linalg.inv(H.matrix) @ target
    denom = src[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (src[0] / denom).reshape(h, w)
        sy = (src[1] / denom).reshape(h, w)
    valid = (
        (denom.reshape(h, w) > 0)
        & (sx >= -WARP_EPS) & (sx <= w - 1 + WARP_EPS)
        & (sy >= -WARP_EPS) & (sy <= h - 1 + WARP_EPS)
    )
    sx = np.where(valid, np.clip(sx, 0, w - 1), 0.0)
    sy = np.where(valid, np.clip(sy, 0, h - 1), 0.0)

    out = _bilinear(values, sx, sy)
    if source_valid is not None:
        coverage = _bilinear(np.asarray(source_valid, dtype=np.float64), sx, sy)
        valid &= coverage >= 1.0 - 1e-9
    out = np.where(valid, out, 0.0)
    return out, valid


def warp(img: GrayImage, H: Union[Homography, np.ndarray]) -> GrayImage:
    """Resample `img` onto the grid that H maps it to; uncovered pixels are 0 and invalid."""
    if not isinstance(H, Homography):
        matrix = np.asarray(H, dtype=np.float64)
        if matrix.shape != (3, 3) or abs(np.linalg.det(matrix)) <= DET_EPS:
            raise ArgumentError("warp needs an invertible 3x3 homography")
        H = Homography(matrix)
    out, valid = warp_array(img.as_float(), H, img.valid)
    return GrayImage(to_gray_pixels(out), valid=valid)


# --- chessboard detection ----------------------------------------------------

def _corner_candidates(data: np.ndarray) -> List[Tuple[float, float, float]]:
    smoothed = ndimage.gaussian_filter(data, HARRIS_SIGMA).astype(np.float32)
    harris = cv2.cornerHarris(smoothed, HARRIS_BLOCK, HARRIS_KSIZE, HARRIS_K)
    # sqrt keeps the response proportional to squared contrast
    response = np.sqrt(np.clip(harris.astype(np.float64), 0.0, None))
    peak = float(response.max())
    if peak <= 1e-9:
        return []
    peaks = (response >= RESPONSE_FRACTION * peak) & (response == ndimage.maximum_filter(response, size=3))
    rows, cols = np.nonzero(peaks)
    strengths = response[rows, cols]
    order = np.argsort(-strengths, kind="stable")

    accepted: List[Tuple[float, float, float]] = []
    for i in order[:MAX_CANDIDATES * 4]:
        x, y = float(cols[i]), float(rows[i])
        if all(math.hypot(x - ax, y - ay) >= MIN_SEPARATION for ax, ay, _ in accepted):
            accepted.append((x, y, float(strengths[i])))
        if len(accepted) >= MAX_CANDIDATES:
            break
    return accepted


def _passes_x_test(data: np.ndarray, x: float, y: float) -> bool:
    """Two dark and two bright sectors alternate on a ring around an inner corner."""
    angles = np.arange(RING_SAMPLES) * (2.0 * math.pi / RING_SAMPLES)
    ring_x = x + RING_RADIUS * np.cos(angles)
    ring_y = y + RING_RADIUS * np.sin(angles)
    values = ndimage.map_coordinates(data, [ring_y, ring_x], order=1, mode="nearest")
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < MIN_CORNER_CONTRAST:
        return False
    mid = 0.5 * (lo + hi)
    dead = 0.1 * (hi - lo)
    signs = np.where(values > mid + dead, 1, np.where(values < mid - dead, -1, 0))
    kept = signs[signs != 0]
    if kept.size < RING_SAMPLES // 2:
        return False

    boundaries = np.flatnonzero(kept != np.roll(kept, 1))
    if len(boundaries) != 4:
        return False
    runs = np.diff(np.append(boundaries, boundaries[0] + kept.size))
    if runs.min() < RING_SAMPLES // 8:
        return False
    positive = np.count_nonzero(kept > 0) / kept.size
    if not 0.3 <= positive <= 0.7:
        return False

    # opposite sectors share a colour
    opposite = signs * np.roll(signs, RING_SAMPLES // 2)
    return np.count_nonzero(opposite < 0) * 4 <= np.count_nonzero(opposite > 0)


def _refine_corners(data: np.ndarray, coarse: np.ndarray, radius: int) -> np.ndarray:
    smoothed = ndimage.gaussian_filter(data, REFINE_SIGMA).astype(np.float32)
    corners = coarse.astype(np.float32).reshape(-1, 1, 2)
    criteria = (cv2.TERM_CRITERIA_EPS + cv2.TERM_CRITERIA_MAX_ITER, REFINE_ITERATIONS, REFINE_EPS)
    refined = cv2.cornerSubPix(smoothed, corners, (radius, radius), (-1, -1), criteria)
    return refined.reshape(-1, 2).astype(np.float64)


def _order_grid(points: np.ndarray, cols: int, rows: int, spacing: float) -> Optional[np.ndarray]:
    s = points[:, 0] + points[:, 1]
    t = points[:, 0] - points[:, 1]
    extremes = points[[np.argmin(s), np.argmax(t), np.argmax(s), np.argmin(t)]]
    ideal_corners = np.array([[0, 0], [cols - 1, 0], [cols - 1, rows - 1], [0, rows - 1]], dtype=np.float64)
    try:
        model, _ = estimate_homography(CorrespondenceSet(ideal_corners, extremes))
    except (EstimationError, ArgumentError):
        return None

    grid = np.array([[i, j] for j in range(rows) for i in range(cols)], dtype=np.float64)
    predicted = model.apply(grid)
    dist = np.hypot(*(predicted[:, None, :] - points[None, :, :]).transpose(2, 0, 1))
    nearest = np.argmin(dist, axis=1)
    if len(set(nearest.tolist())) != len(grid):
        return None
    if np.any(dist[np.arange(len(grid)), nearest] > 0.3 * spacing):
        return None
    return points[nearest]


def _fit_grid(points: np.ndarray, strengths: np.ndarray, cols: int, rows: int) -> Optional[np.ndarray]:
    expected = cols * rows
    diff = points[:, None, :] - points[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, np.inf)
    spacing = float(np.median(dist.min(axis=1)))
    linked = (dist >= 0.7 * spacing) & (dist <= 1.3 * spacing)
    n_comp, labels = connected_components(csr_matrix(linked), directed=False)

    sizes = np.bincount(labels, minlength=n_comp)
    for comp in sorted(np.flatnonzero(sizes >= expected), key=lambda c: sizes[c] - expected):
        members = np.flatnonzero(labels == comp)
        if len(members) > expected:
            members = members[np.argsort(-strengths[members], kind="stable")[:expected]]
        ordered = _order_grid(points[members], cols, rows, spacing)
        if ordered is not None:
            return ordered
    return None


def detect_chessboard(img: GrayImage, inner_cols: int, inner_rows: int) -> np.ndarray:
    """Inner corners of a fully visible chessboard, row-major from the top-left.

    Returns an (inner_cols * inner_rows, 2) array of subpixel (x, y) positions.
    """
    if inner_cols < 2 or inner_rows < 2:
        raise ArgumentError(f"board needs at least 2x2 inner corners, got {inner_cols}x{inner_rows}")
    expected = inner_cols * inner_rows
    data = img.as_float()

    candidates = [c for c in _corner_candidates(data) if _passes_x_test(data, c[0], c[1])]
    logger.debug(f"chessboard: {len(candidates)} x-corner candidates, {expected} expected")
    if len(candidates) < expected:
        raise DetectionError(
            f"found {len(candidates)} corner candidates, board needs {expected}",
            found=len(candidates),
            expected=expected,
        )

    coarse = np.array([(x, y) for x, y, _ in candidates])
    strengths = np.array([s for _, _, s in candidates])
    nn = np.hypot(*(coarse[:, None, :] - coarse[None, :, :]).transpose(2, 0, 1))
    np.fill_diagonal(nn, np.inf)
    radius = int(np.clip(0.4 * np.median(nn.min(axis=1)), 2, 5))

    refined = _refine_corners(data, coarse, radius)

    grid = _fit_grid(refined, strengths, inner_cols, inner_rows)
    if grid is None:
        raise DetectionError(
            f"no {inner_cols}x{inner_rows} grid among {len(candidates)} corner candidates",
            found=len(candidates),
            expected=expected,
        )
    return grid


def register_pair(vis: GrayImage, nir: GrayImage, board: Tuple[int, int]) -> RegistrationResult:
    """Bring the NIR image onto the VIS grid using the chessboard marker seen by both channels."""
    if vis.shape != nir.shape:
        raise ArgumentError(f"channel sizes differ: {vis.shape} vs {nir.shape}")
    cols, rows = board
    corners: Dict[str, np.ndarray] = {}
    diagnostics: Dict[str, str] = {}
    for name, img in (("vis", vis), ("nir", nir)):
        try:
            corners[name] = detect_chessboard(img, cols, rows)
        except DetectionError as e:
            logger.warning(f"marker detection failed in {name}: {e}")
            diagnostics[name] = str(e)
    if diagnostics:
        raise RegistrationError(f"marker not found in: {', '.join(sorted(diagnostics))}", diagnostics)

    try:
        H_est, fit_rms = estimate_homography(CorrespondenceSet(corners["nir"], corners["vis"]))
    except EstimationError as e:
        raise RegistrationError(f"homography estimation failed: {e}", {"estimation": str(e)}) from e

    logger.info(f"registered NIR onto VIS: {len(corners['vis'])} corners, fit RMS {fit_rms:.4f} px")
    return RegistrationResult(
        nir_registered=warp(nir, H_est),
        H_est=H_est,
        fit_rms=fit_rms,
        vis_corners=corners["vis"],
        nir_corners=corners["nir"],
    )


# --- fusion ------------------------------------------------------------------

def fuse_weighted(vis: GrayImage, nir_reg: GrayImage, w: WeightMap) -> GrayImage:
    """F = clamp(round(V + w * N), 0, 255)."""
    if not (vis.shape == nir_reg.shape == w.shape):
        raise ArgumentError(f"fusion inputs differ in size: {vis.shape}, {nir_reg.shape}, {w.shape}")
    return GrayImage(to_gray_pixels(vis.as_float() + w.weights * nir_reg.as_float()))


def plant_mask(nir_reg: GrayImage, vis: GrayImage, delta: float, alpha: float) -> WeightMap:
    """-alpha where the NIR-bright/VIS-dark plant signature N - V > delta holds, after 3x3 majority smoothing."""
    if nir_reg.shape != vis.shape:
        raise ArgumentError(f"channel sizes differ: {nir_reg.shape} vs {vis.shape}")
    if delta <= 0:
        raise ArgumentError(f"delta must be positive, got {delta}")
    if not 0.0 <= alpha <= 1.0:
        raise ArgumentError(f"alpha must lie in [0, 1], got {alpha}")
    signature = (nir_reg.as_float() - vis.as_float()) > delta
    votes = ndimage.convolve(signature.astype(np.int32), np.ones((3, 3), dtype=np.int32), mode="nearest")
    mask = votes >= 5
    return WeightMap(np.where(mask, -alpha, 0.0), selection=mask)


def weights_from_regions(
    shape: Tuple[int, int], regions: Dict[str, Rect], region_weights: Dict[str, float]
) -> WeightMap:
    """Weight map assigning each listed region its weight; later entries win where rects overlap."""
    height, width = shape
    weights = np.zeros(shape)
    for label, value in region_weights.items():
        if label not in regions:
            raise ArgumentError(f"unknown region '{label}'")
        if not -1.0 <= value <= 1.0:
            raise ArgumentError(f"weight for '{label}' must lie in [-1, 1], got {value}")
        rows, cols = rect_slice(check_rect(regions[label], width, height))
        weights[rows, cols] = value
    return WeightMap(weights)


def weightmap_to_gray(w: WeightMap) -> GrayImage:
    """PGM encoding: 0 -> -1, 128 -> 0, 255 -> +1, linear on each side."""
    weights = w.weights
    levels = np.where(weights < 0, 128.0 + 128.0 * weights, 128.0 + 127.0 * weights)
    return GrayImage(to_gray_pixels(levels))


def weightmap_from_gray(img: GrayImage) -> WeightMap:
    levels = img.as_float()
    return WeightMap(np.where(levels < 128, (levels - 128.0) / 128.0, (levels - 128.0) / 127.0))


def mask_iou(w: Union[WeightMap, np.ndarray], truth_mask: np.ndarray) -> float:
    """Intersection over union of the selected pixels and a ground-truth mask."""
    predicted = w.selected if isinstance(w, WeightMap) else np.asarray(w, dtype=bool)
    truth = np.asarray(truth_mask, dtype=bool)
    if predicted.shape != truth.shape:
        raise ArgumentError(f"mask sizes differ: {predicted.shape} vs {truth.shape}")
    union = np.count_nonzero(predicted | truth)
    if union == 0:
        return 1.0
    return np.count_nonzero(predicted & truth) / union
