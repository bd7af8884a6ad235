"""Spectral-band optical model of water.

Coefficients are band-averaged effective scalars: one absorption and one scattering
coefficient per acquisition band, plus a single Henyey-Greenstein phase function
shared by both bands.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Union

import numpy as np
import pandas as pd
from scipy import integrate

from utils.errors import ArgumentError, ConfigurationError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ChannelBand:
    """A named acquisition band, wavelengths in nm."""

    name: str
    lambda_min: float
    lambda_peak: float
    lambda_max: float

    def __post_init__(self):
        if not self.name:
            raise ArgumentError("band name is required")
        if min(self.lambda_min, self.lambda_peak, self.lambda_max) <= 0:
            raise ArgumentError(f"band {self.name}: wavelengths must be positive")
        if not self.lambda_min < self.lambda_peak < self.lambda_max:
            raise ArgumentError(f"band {self.name}: need lambda_min < lambda_peak < lambda_max")

    def contains(self, wavelength: float) -> bool:
        return self.lambda_min <= wavelength <= self.lambda_max


# RG-712 long-pass filter with an 850 nm LED
NIR_BAND = ChannelBand("nir", 750.0, 850.0, 1400.0)
# UV and IR cut-off filters with a warm white LED
VIS_BAND = ChannelBand("vis", 380.0, 560.0, 780.0)


def band_presets() -> Dict[str, ChannelBand]:
    return {NIR_BAND.name: NIR_BAND, VIS_BAND.name: VIS_BAND}


@dataclass(frozen=True)
class OpticalCoefficients:
    """Absorption `a` and scattering `b`, both in 1/m."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ArgumentError("optical coefficients must be finite")
        if self.a < 0 or self.b < 0:
            raise ArgumentError(f"optical coefficients must be nonnegative (a={self.a}, b={self.b})")

    @property
    def c(self) -> float:
        return beam_attenuation(self)


@dataclass(frozen=True)
class PhaseFunction:
    """Henyey-Greenstein volume scattering function with asymmetry `g`."""

    g: float

    def __post_init__(self):
        if not -1.0 < self.g < 1.0:
            raise ArgumentError(f"phase asymmetry g must lie in (-1, 1), got {self.g}")


@dataclass(frozen=True)
class WaterBody:
    coefficients: Dict[str, OpticalCoefficients]
    phase: PhaseFunction
    ambient_veiling: Dict[str, float] = field(default_factory=dict)
    enforce_orderings: bool = True

    def __post_init__(self):
        for band, value in self.ambient_veiling.items():
            if value < 0:
                raise ConfigurationError(f"ambient veiling for band '{band}' must be >= 0")
        if self.enforce_orderings:
            problems = ordering_violations(self.coefficients)
            if problems:
                raise ConfigurationError("; ".join(problems))

    def coefficients_for(self, band: Union[ChannelBand, str]) -> OpticalCoefficients:
        name = band.name if isinstance(band, ChannelBand) else band
        try:
            return self.coefficients[name]
        except KeyError:
            raise ConfigurationError(f"water body has no coefficients for band '{name}'") from None

    def veiling_for(self, band: Union[ChannelBand, str]) -> float:
        name = band.name if isinstance(band, ChannelBand) else band
        return self.ambient_veiling.get(name, 0.0)


def ordering_violations(coefficients: Dict[str, OpticalCoefficients]) -> List[str]:
    """Qualitative NIR/VIS orderings: NIR absorbs more, VIS scatters more."""
    nir = coefficients.get(NIR_BAND.name)
    vis = coefficients.get(VIS_BAND.name)
    if nir is None or vis is None:
        return []
    problems = []
    if not nir.a > vis.a:
        problems.append(f"expected a(nir) > a(vis), got {nir.a} <= {vis.a}")
    if not vis.b > nir.b:
        problems.append(f"expected b(vis) > b(nir), got {vis.b} <= {nir.b}")
    return problems


def water_presets() -> Dict[str, WaterBody]:
    """Built-in water bodies.

    `natural` models turbid inland water (isotropic scattering, strong VIS veiling);
    `clear` models distilled or supply-network water (weak, forward-peaked scattering).
    The magnitudes only need to respect the NIR/VIS orderings.
    """
    return {
        "natural": WaterBody(
            coefficients={
                "vis": OpticalCoefficients(a=0.05, b=0.6),
                "nir": OpticalCoefficients(a=1.5, b=0.05),
            },
            phase=PhaseFunction(g=0.0),
            ambient_veiling={"vis": 0.8, "nir": 0.8},
        ),
        "clear": WaterBody(
            coefficients={
                "vis": OpticalCoefficients(a=0.02, b=0.05),
                "nir": OpticalCoefficients(a=1.3, b=0.01),
            },
            phase=PhaseFunction(g=0.8),
            ambient_veiling={"vis": 0.3, "nir": 0.3},
        ),
    }


def beam_attenuation(coeffs: OpticalCoefficients) -> float:
    return coeffs.a + coeffs.b


def transmission(c: ArrayLike, r: ArrayLike) -> ArrayLike:
    """Percent of source radiance left after a path of length `r` (m) through attenuation `c` (1/m)."""
    c_arr = np.asarray(c, dtype=np.float64)
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(c_arr < 0) or np.any(r_arr < 0):
        raise ArgumentError("attenuation and path length must be nonnegative")
    # exp underflows past c*r ~ 745; keep the result inside (0, 100]
    result = np.maximum(np.exp(-c_arr * r_arr) * 100.0, np.finfo(np.float64).tiny)
    if result.ndim == 0:
        return float(result)
    return result


def transmission_from_radiance(L0: float, Lr: float) -> float:
    if L0 <= 0:
        raise ArgumentError(f"source radiance must be positive, got {L0}")
    if Lr < 0:
        raise ArgumentError(f"received radiance must be nonnegative, got {Lr}")
    if Lr > L0:
        raise ArgumentError("received radiance exceeds source radiance (water is a passive medium)")
    return Lr / L0 * 100.0


def phase_value(phase: PhaseFunction, theta: ArrayLike) -> ArrayLike:
    """Henyey-Greenstein density per steradian at scattering angle `theta` (radians)."""
    theta_arr = np.asarray(theta, dtype=np.float64)
    if np.any(theta_arr < 0) or np.any(theta_arr > math.pi):
        raise ArgumentError("scattering angle must lie in [0, pi]")
    g = phase.g
    denom = 1.0 + g * g - 2.0 * g * np.cos(theta_arr)
    result = (1.0 - g * g) / (4.0 * math.pi * denom * np.sqrt(denom))
    if result.ndim == 0:
        return float(result)
    return result


def _cosine_integral(phase: PhaseFunction, mu_from: float, mu_to: float) -> float:
    # solid angle element is 2*pi*d(cos theta)
    value, _ = integrate.quad(
        lambda mu: 2.0 * math.pi * phase_value(phase, math.acos(min(max(mu, -1.0), 1.0))),
        mu_from,
        mu_to,
        epsabs=1e-13,
        epsrel=1e-12,
        limit=200,
    )
    return value


def backscatter_fraction(phase: PhaseFunction) -> float:
    """Share of scattered light sent into the rear hemisphere (theta > pi/2)."""
    return min(max(_cosine_integral(phase, -1.0, 0.0), 0.0), 1.0)


def total_scattering_integral(phase: PhaseFunction) -> float:
    """Integral of the phase function over the full sphere (1 for a valid phase function)."""
    return _cosine_integral(phase, -1.0, 0.0) + _cosine_integral(phase, 0.0, 1.0)


def transmission_table(water: WaterBody, bands: Iterable[ChannelBand], ranges: Iterable[float]) -> pd.DataFrame:
    """T(r) per band as a long table with columns r_m, band, T_percent."""
    rows = []
    ranges = [float(r) for r in ranges]
    for band in bands:
        c = beam_attenuation(water.coefficients_for(band))
        for r in ranges:
            rows.append({"r_m": r, "band": band.name, "T_percent": transmission(c, r)})
    return pd.DataFrame(rows, columns=["r_m", "band", "T_percent"])
