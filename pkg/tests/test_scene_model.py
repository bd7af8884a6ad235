import dataclasses

import numpy as np
import pytest

from optics.scene_model import (
    Material,
    SceneObject,
    builtin_materials,
    coverage_map,
    label_masks,
    materials_table,
    region_table,
    texture_value,
    validate_scene,
)
from optics.water_optics import NIR_BAND, VIS_BAND, OpticalCoefficients, PhaseFunction, WaterBody
from tests.helpers import lossless_water, make_scene, patch
from utils.errors import ArgumentError


class TestCatalog:
    def test_names(self):
        assert set(builtin_materials()) == {
            "chessboard_marker", "rust_metal", "tinplate", "rubber", "fabric_stripes",
            "fabric_blobs", "black_fabric", "plant", "gravel", "black_background",
        }

    def test_observed_channel_behaviour(self):
        catalog = builtin_materials()
        assert catalog["plant"].rho_nir > catalog["plant"].rho_vis
        assert catalog["fabric_blobs"].pattern_contrast_nir == 0
        assert catalog["fabric_blobs"].pattern_contrast_vis > 0
        assert catalog["black_fabric"].rho_vis < 0.05
        assert catalog["black_fabric"].rho_nir > 0.5
        assert max(catalog["black_background"].rho_vis, catalog["black_background"].rho_nir) < 0.05

    def test_every_material_is_valid(self):
        for material in builtin_materials().values():
            assert material.violations() == [], material.name

    def test_table(self):
        table = materials_table()
        assert len(table) == len(builtin_materials())
        assert {"name", "rho_vis", "rho_nir", "pattern"} <= set(table.columns)


class TestTexture:
    def test_uniform_is_constant(self):
        tinplate = builtin_materials()["tinplate"]
        u, v = np.meshgrid(np.linspace(0, 1, 11), np.linspace(0, 1, 11))
        assert np.all(texture_value(tinplate, VIS_BAND, u, v) == tinplate.rho_vis)

    def test_chessboard_alternates(self):
        board = Material("board", 0.5, 0.5, "chessboard", 1.0, 1.0, 2.0)
        even = texture_value(board, VIS_BAND, 0.1, 0.1)
        odd = texture_value(board, VIS_BAND, 0.6, 0.1)
        assert even == 1.0
        assert odd == 0.0

    def test_blob_fabric_flat_in_nir(self):
        fabric = builtin_materials()["fabric_blobs"]
        u, v = np.meshgrid(np.linspace(0, 1, 50), np.linspace(0, 1, 50))
        assert np.all(texture_value(fabric, NIR_BAND, u, v) == fabric.rho_nir)
        assert np.ptp(texture_value(fabric, VIS_BAND, u, v)) > 0

    def test_amplitude_bound(self):
        u, v = np.meshgrid(np.linspace(0, 1, 64), np.linspace(0, 1, 64))
        for material in builtin_materials().values():
            for band in (VIS_BAND, NIR_BAND):
                values = texture_value(material, band, u, v)
                assert np.max(np.abs(values - material.reflectance(band))) <= material.contrast(band) + 1e-12
                assert np.all((values >= 0) & (values <= 1))

    def test_coordinates_outside_unit_square(self):
        with pytest.raises(ArgumentError):
            texture_value(builtin_materials()["gravel"], VIS_BAND, 1.2, 0.5)

    def test_deterministic(self):
        rust = builtin_materials()["rust_metal"]
        assert texture_value(rust, VIS_BAND, 0.37, 0.81) == texture_value(rust, VIS_BAND, 0.37, 0.81)


class TestValidateScene:
    def test_fixture_scene_is_valid(self, tank_config):
        assert validate_scene(tank_config.scene) == []

    def test_reports_every_violation(self):
        scene = make_scene(
            [patch((0, 0, 8, 8), 0.0, 1), patch((4, 4, 8, 8), 0.5, 1)],
            lossless_water(),
        )
        messages = [v.message for v in validate_scene(scene)]
        assert "nonpositive distance" in messages
        assert any(m.startswith("duplicate z_order") for m in messages)

    def test_missing_band_coefficients(self):
        water = WaterBody({"vis": OpticalCoefficients(0.1, 0.3)}, PhaseFunction(0.0))
        scene = make_scene([patch((0, 0, 8, 8), 0.5, 1)], water)
        violations = validate_scene(scene)
        assert [v.path for v in violations] == ["water.coefficients"]
        assert "nir" in violations[0].message

    def test_out_of_bounds_rect_and_close_background(self):
        scene = make_scene([patch((30, 30, 8, 8), 3.0, 1)], lossless_water())
        messages = [v.message for v in validate_scene(scene)]
        assert any("outside image bounds" in m for m in messages)
        assert "background closer than an object" in messages

    def test_invalid_material(self):
        bad = dataclasses.replace(builtin_materials()["tinplate"], rho_vis=1.5)
        scene = make_scene([dataclasses.replace(patch((0, 0, 4, 4), 0.5, 1), material=bad)], lossless_water())
        assert any("rho_vis" in v.message for v in validate_scene(scene))

    def test_non_numeric_material_field_is_a_violation(self):
        bad = Material("custom", "high", 0.5)
        scene = make_scene([SceneObject(bad, 0.5, (0, 0, 4, 4), 1)], lossless_water())
        violations = validate_scene(scene)
        assert [v.path for v in violations] == ["scene.objects[0].material"]
        assert "rho_vis" in violations[0].message


def test_higher_z_order_wins():
    scene = make_scene(
        [patch((0, 0, 10, 10), 0.5, 2, label="front"), patch((5, 5, 10, 10), 0.6, 1, label="back")],
        lossless_water(),
    )
    coverage = coverage_map(scene)
    assert coverage[7, 7] == 0
    assert coverage[12, 12] == 1
    assert coverage[20, 20] == -1
    masks = label_masks(scene)
    assert not np.any(masks["front"] & masks["back"])
    assert region_table(scene)["back"]["visible_pixels"] == 100 - 25
