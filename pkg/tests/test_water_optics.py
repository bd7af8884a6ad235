import math

import numpy as np
import pytest

from optics.water_optics import (
    NIR_BAND,
    VIS_BAND,
    ChannelBand,
    OpticalCoefficients,
    PhaseFunction,
    WaterBody,
    backscatter_fraction,
    band_presets,
    beam_attenuation,
    phase_value,
    total_scattering_integral,
    transmission,
    transmission_from_radiance,
    transmission_table,
    water_presets,
)
from utils.errors import ArgumentError, ConfigurationError


@pytest.mark.parametrize("a, b, c", [(0.1, 0.2, 0.1 + 0.2), (0.3, 0.6, 0.3 + 0.6), (0.0, 0.0, 0.0), (4.0, 0.5, 4.5)])
def test_beam_attenuation_is_the_sum(a, b, c):
    coeffs = OpticalCoefficients(a, b)
    assert beam_attenuation(coeffs) == c
    assert coeffs.c == a + b


def test_negative_coefficients_rejected():
    with pytest.raises(ArgumentError):
        OpticalCoefficients(-0.1, 0.2)


class TestTransmission:
    def test_zero_path_is_lossless(self):
        assert transmission(3.7, 0.0) == 100.0

    def test_zero_attenuation_is_lossless(self):
        assert transmission(0.0, 5.0) == 100.0

    def test_half_value_at_ln2(self):
        assert transmission(math.log(2.0), 1.0) == pytest.approx(50.0, rel=1e-9)
        assert transmission(1.0, math.log(2.0)) == pytest.approx(50.0, rel=1e-9)

    def test_long_paths_stay_positive(self):
        assert 0.0 < transmission(1000.0, 1000.0) <= 100.0
        assert np.all(transmission(np.array([1.0, 900.0]), 2.0) > 0.0)

    def test_negative_arguments_rejected(self):
        with pytest.raises(ArgumentError):
            transmission(-1.0, 1.0)
        with pytest.raises(ArgumentError):
            transmission(1.0, -0.5)

    def test_segments_multiply(self):
        rng = np.random.default_rng(2024)
        c = rng.uniform(0.0, 5.0, 1000)
        r1 = rng.uniform(0.0, 3.0, 1000)
        r2 = rng.uniform(0.0, 3.0, 1000)
        whole = transmission(c, r1 + r2)
        split = transmission(c, r1) * transmission(c, r2) / 100.0
        np.testing.assert_allclose(whole, split, rtol=1e-9, atol=0.0)

    def test_strictly_decreasing_in_range_and_attenuation(self):
        grid = np.linspace(0.0, 4.0, 41)
        assert np.all(np.diff(transmission(0.8, grid)) < 0)
        assert np.all(np.diff(transmission(grid, 0.8)) < 0)

    def test_array_stays_in_percent_range(self):
        values = transmission(np.array([0.0, 0.5, 2.0]), 1.5)
        assert np.all(values > 0) and np.all(values <= 100.0)


class TestTransmissionFromRadiance:
    @pytest.mark.parametrize("L0, Lr, expected", [(1.0, 1.0, 100.0), (2.0, 1.0, 50.0), (1.0, 0.0, 0.0)])
    def test_ratio(self, L0, Lr, expected):
        assert transmission_from_radiance(L0, Lr) == expected

    def test_nonpositive_source_rejected(self):
        with pytest.raises(ArgumentError):
            transmission_from_radiance(0.0, 0.0)

    def test_gain_rejected(self):
        with pytest.raises(ArgumentError, match="passive"):
            transmission_from_radiance(1.0, 1.5)


class TestPhaseFunction:
    def test_isotropic_value(self):
        for theta in (0.0, 1.0, math.pi / 2, math.pi):
            assert phase_value(PhaseFunction(0.0), theta) == pytest.approx(1.0 / (4.0 * math.pi))

    def test_forward_peak_closed_form(self):
        g = 0.9
        expected = (1 - g * g) / (4 * math.pi * (1 + g * g - 2 * g) ** 1.5)
        assert phase_value(PhaseFunction(g), 0.0) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("g", [-0.5, 0.0, 0.5, 0.9])
    def test_normalised_over_sphere(self, g):
        assert total_scattering_integral(PhaseFunction(g)) == pytest.approx(1.0, abs=1e-6)

    def test_angle_outside_range_rejected(self):
        with pytest.raises(ArgumentError):
            phase_value(PhaseFunction(0.2), -0.1)
        with pytest.raises(ArgumentError):
            phase_value(PhaseFunction(0.2), math.pi + 0.1)

    @pytest.mark.parametrize("g", [-1.0, 1.0, 1.5])
    def test_asymmetry_bounds(self, g):
        with pytest.raises(ArgumentError):
            PhaseFunction(g)


class TestBackscatter:
    def test_isotropic_half(self):
        assert backscatter_fraction(PhaseFunction(0.0)) == pytest.approx(0.5, abs=1e-9)

    def test_forward_limit(self):
        assert backscatter_fraction(PhaseFunction(0.999)) < 1e-3

    def test_matches_closed_form(self):
        # for Henyey-Greenstein the rear hemisphere holds (1-g)/(2g) * ((1+g)/sqrt(1+g^2) - 1)
        g = 0.5
        expected = (1 - g) / (2 * g) * ((1 + g) / math.sqrt(1 + g * g) - 1)
        assert backscatter_fraction(PhaseFunction(g)) == pytest.approx(expected, abs=1e-9)

    def test_decreasing_in_g(self):
        values = [backscatter_fraction(PhaseFunction(g)) for g in np.linspace(-0.9, 0.9, 19)]
        assert all(later < earlier for earlier, later in zip(values, values[1:]))


class TestPresets:
    def test_band_presets(self):
        bands = band_presets()
        assert bands["nir"] == NIR_BAND and bands["vis"] == VIS_BAND
        assert NIR_BAND.contains(850.0) and not NIR_BAND.contains(700.0)
        assert VIS_BAND.contains(380.0) and VIS_BAND.contains(780.0)

    def test_band_wavelength_order(self):
        with pytest.raises(ArgumentError):
            ChannelBand("bad", 800.0, 700.0, 900.0)

    @pytest.mark.parametrize("name", ["natural", "clear"])
    def test_water_orderings(self, name):
        water = water_presets()[name]
        nir, vis = water.coefficients_for("nir"), water.coefficients_for(VIS_BAND)
        assert nir.a > vis.a
        assert vis.b > nir.b

    def test_phase_regimes(self):
        presets = water_presets()
        assert presets["natural"].phase.g == 0.0
        assert presets["clear"].phase.g == 0.8

    def test_ordering_violation_rejected(self):
        swapped = {"vis": OpticalCoefficients(1.5, 0.05), "nir": OpticalCoefficients(0.05, 0.6)}
        with pytest.raises(ConfigurationError, match="a\\(nir\\) > a\\(vis\\)"):
            WaterBody(swapped, PhaseFunction(0.0))
        WaterBody(swapped, PhaseFunction(0.0), enforce_orderings=False)

    def test_missing_band(self):
        water = WaterBody({"vis": OpticalCoefficients(0.1, 0.2)}, PhaseFunction(0.0))
        with pytest.raises(ConfigurationError, match="nir"):
            water.coefficients_for(NIR_BAND)


def test_transmission_table_columns():
    table = transmission_table(water_presets()["natural"], [VIS_BAND, NIR_BAND], [0.0, 1.0, 2.0])
    assert list(table.columns) == ["r_m", "band", "T_percent"]
    assert len(table) == 6
    assert (table[table.r_m == 0.0].T_percent == 100.0).all()
    at_two = table[table.r_m == 2.0].set_index("band").T_percent
    # NIR is absorbed much faster than VIS
    assert at_two["nir"] < at_two["vis"]
