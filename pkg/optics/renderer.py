"""Per-band image formation and 8-bit acquisition.

Each pixel sums the reflected beam (lamp -> object -> camera, attenuated along the
path and through the housing window twice) and the veiling light backscattered
into the line of sight.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from config import Config
from imaging.raster import GrayImage, RadianceImage, Rect, to_gray_pixels
from imaging.registration_fusion import Homography, warp_array
from optics.scene_model import Material, SceneSpec, coverage_map, texture_value, validate_scene
from optics.water_optics import (
    ChannelBand,
    OpticalCoefficients,
    PhaseFunction,
    WaterBody,
    backscatter_fraction,
    beam_attenuation,
)
from utils.errors import ArgumentError, ConfigurationError

logger = logging.getLogger(__name__)

VIS_STREAM = 0
NIR_STREAM = 1


@dataclass(frozen=True)
class AcquisitionModel:
    gain: float = Config.DEFAULT_GAIN
    noise_sigma: float = Config.DEFAULT_NOISE_SIGMA
    seed: int = Config.DEFAULT_SEED
    nir_misalignment: Homography = field(default_factory=Homography.identity)
    interface_transmittance: float = Config.GLASS_TRANSMITTANCE
    supersample: int = Config.SUPERSAMPLE

    def __post_init__(self):
        if not self.gain > 0:
            raise ArgumentError(f"gain must be positive, got {self.gain}")
        if self.noise_sigma < 0:
            raise ArgumentError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not 0.0 < self.interface_transmittance <= 1.0:
            raise ArgumentError(f"interface_transmittance must lie in (0, 1], got {self.interface_transmittance}")
        if int(self.supersample) != self.supersample or self.supersample < 1:
            raise ArgumentError(f"supersample must be a positive integer, got {self.supersample}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ArgumentError(f"seed must be a nonnegative integer, got {self.seed}")


def direct_radiance(
    power: float,
    rho: Union[float, np.ndarray],
    c: float,
    r: float,
    interface_transmittance: float,
    colocated: bool = True,
) -> Union[float, np.ndarray]:
    """Reflected beam reaching the sensor. A colocated lamp doubles the water path."""
    path = 2.0 * r if colocated else r
    return power * rho * math.exp(-c * path) * interface_transmittance ** 2


def veiling_radiance(veiling: float, coeffs: OpticalCoefficients, phase: PhaseFunction, r: float) -> float:
    """Backscattered light accumulated over a line of sight of length r; saturates at V*(b/c)*B."""
    c = beam_attenuation(coeffs)
    if c == 0:
        return 0.0
    return veiling * (coeffs.b / c) * backscatter_fraction(phase) * (1.0 - math.exp(-c * r))


def _mean_texture(
    material: Material, band: ChannelBand, cols: np.ndarray, rows: np.ndarray, rect: Rect, supersample: int
) -> np.ndarray:
    rx, ry, rw, rh = rect
    offsets = (np.arange(supersample) + 0.5) / supersample
    total = np.zeros(cols.shape, dtype=np.float64)
    for oy in offsets:
        v = np.clip((rows - ry + oy) / rh, 0.0, 1.0)
        for ox in offsets:
            u = np.clip((cols - rx + ox) / rw, 0.0, 1.0)
            total += texture_value(material, band, u, v)
    return total / (supersample * supersample)


def render_channel(
    scene: SceneSpec,
    band: ChannelBand,
    water: WaterBody,
    interface_transmittance: float = Config.GLASS_TRANSMITTANCE,
    supersample: int = Config.SUPERSAMPLE,
) -> RadianceImage:
    """Relative radiance of every pixel as seen through `band`."""
    violations = validate_scene(scene)
    if violations:
        raise ConfigurationError("invalid scene: " + "; ".join(str(v) for v in violations))
    coeffs = water.coefficients_for(band)
    if not 0.0 < interface_transmittance <= 1.0:
        raise ArgumentError(f"interface_transmittance must lie in (0, 1], got {interface_transmittance}")
    if supersample < 1:
        raise ArgumentError(f"supersample must be >= 1, got {supersample}")

    c = beam_attenuation(coeffs)
    power = scene.light.power_for(band)
    veiling = water.veiling_for(band)
    coverage = coverage_map(scene)
    radiance = np.zeros((scene.height, scene.width), dtype=np.float64)

    surfaces = [(-1, scene.background.material, scene.background.distance, (0, 0, scene.width, scene.height))]
    surfaces += [(i, obj.material, obj.distance, tuple(obj.rect)) for i, obj in enumerate(scene.objects)]
    for index, material, distance, rect in surfaces:
        rows, cols = np.nonzero(coverage == index)
        if rows.size == 0:
            continue
        rho = _mean_texture(material, band, cols, rows, rect, supersample)
        radiance[rows, cols] = (
            direct_radiance(power, rho, c, distance, interface_transmittance, scene.light.colocated)
            + veiling_radiance(veiling, coeffs, water.phase, distance)
        )

    logger.debug(f"rendered {band.name}: mean radiance {radiance.mean():.4f}")
    return RadianceImage(radiance)


def sensor_noise(
    acq: AcquisitionModel, stream: int, shape: Tuple[int, int], origin: Tuple[int, int] = (0, 0)
) -> np.ndarray:
    """Gaussian read noise for the pixels of `shape` whose top-left sits at absolute (x, y) `origin`.

    Each image row draws from its own generator keyed by (seed, stream, y) and the
    draw index along the row is the absolute column, so a tile gets exactly the
    noise of the matching window of the full frame.
    """
    x0, y0 = origin
    if x0 < 0 or y0 < 0:
        raise ArgumentError(f"tile origin must be nonnegative, got {origin}")
    height, width = shape
    noise = np.empty((height, width), dtype=np.float64)
    for row in range(height):
        rng = np.random.default_rng([int(acq.seed), int(stream), y0 + row])
        noise[row] = rng.normal(0.0, acq.noise_sigma, size=x0 + width)[x0:]
    return noise


def quantize(
    img: RadianceImage, acq: AcquisitionModel, stream: int = VIS_STREAM, origin: Tuple[int, int] = (0, 0)
) -> GrayImage:
    """clamp(round(gain * value + noise), 0, 255); noise is keyed by (seed, stream) and pixel position."""
    values = acq.gain * img.values
    if acq.noise_sigma > 0:
        values = values + sensor_noise(acq, stream, values.shape, origin)
    return GrayImage(to_gray_pixels(values))


def acquire_pair(scene: SceneSpec, water: WaterBody, acq: AcquisitionModel) -> Tuple[GrayImage, GrayImage, Homography]:
    """VIS on the reference grid, NIR displaced by the acquisition misalignment.

    The returned homography maps VIS-grid coordinates to NIR-grid coordinates.
    """
    vis_band = scene.band("vis")
    nir_band = scene.band("nir")
    vis_rad = render_channel(scene, vis_band, water, acq.interface_transmittance, acq.supersample)
    nir_rad = render_channel(scene, nir_band, water, acq.interface_transmittance, acq.supersample)
    true_H = acq.nir_misalignment

    vis = quantize(vis_rad, acq, VIS_STREAM)
    if true_H.is_identity():
        nir = quantize(nir_rad, acq, NIR_STREAM)
    else:
        shifted, valid = warp_array(nir_rad.values, true_H)
        quantized = quantize(RadianceImage(shifted), acq, NIR_STREAM)
        nir = GrayImage(np.where(valid, quantized.pixels, 0).astype(np.uint8), valid=valid)

    logger.info(
        f"acquired '{scene.name}': mean VIS {vis.pixels.mean():.1f}, mean NIR {nir.pixels.mean():.1f}"
    )
    return vis, nir, true_H
