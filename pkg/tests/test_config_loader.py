import copy
import json

import numpy as np
import pytest

from config import Config
from imaging.registration_fusion import Homography
from utils.config_loader import load_config, load_config_dict, parse_water, with_overrides
from utils.errors import ConfigValidationError


@pytest.fixture
def tank_doc(tank_config_path):
    return json.loads(tank_config_path.read_text())


def error_paths(doc, base_dir="."):
    with pytest.raises(ConfigValidationError) as info:
        load_config_dict(doc, base_dir)
    return dict(info.value.errors)


class TestFixtures:
    def test_tank_scene(self, tank_config):
        assert tank_config.name == "tank_scene"
        assert set(tank_config.scene.regions()) == {"marker", "rust", "tinplate", "plant", "gravel"}
        assert tank_config.registration.board == (4, 4)
        assert tank_config.fusion.mode == "plant_mask"
        assert tank_config.output_dir == "out/tank_scene"

    def test_fabric_scene(self, fabric_config):
        assert {"fabric_blobs", "black_fabric", "marker"} <= set(fabric_config.scene.regions())
        assert fabric_config.fusion.region_weights == {"black_fabric": 0.5}

    def test_misalignment_about_image_centre(self, tank_config):
        expected = Homography.from_misalignment(2.0, -1.5, 0.5, center=(127.5, 127.5))
        np.testing.assert_allclose(tank_config.acquisition.nir_misalignment.matrix, expected.matrix)


class TestValidation:
    def test_missing_nir_coefficients(self, tank_doc):
        tank_doc["water"] = {"coefficients": {"vis": {"a": 0.05, "b": 0.6}}}
        errors = error_paths(tank_doc)
        assert "$.water.coefficients" in errors
        assert "'nir'" in errors["$.water.coefficients"]

    def test_canny_thresholds_out_of_order(self, tank_doc):
        tank_doc["analysis"]["canny_low"] = 40.0
        errors = error_paths(tank_doc)
        assert list(errors) == ["$.analysis.canny_low"]

    def test_all_problems_reported_together(self, tank_doc):
        tank_doc["analysis"]["canny_low"] = 40.0
        tank_doc["acquisition"]["gain"] = -1
        tank_doc["registration"]["board"] = [1, 4]
        tank_doc["colour"] = "red"
        errors = error_paths(tank_doc)
        assert {"$.analysis.canny_low", "$.acquisition.gain", "$.registration.board", "$.colour"} <= set(errors)
        assert errors["$.colour"] == "unknown key"

    def test_bad_object_fields(self, tank_doc):
        tank_doc["scene"]["objects"][1]["material"] = "unobtainium"
        tank_doc["scene"]["objects"][2]["rect"] = [0, 0, 0, 5]
        errors = error_paths(tank_doc)
        assert "$.scene.objects[1].material" in errors
        assert "$.scene.objects[2].rect" in errors

    def test_scene_violations_carry_json_path(self, tank_doc):
        tank_doc["scene"]["objects"][0]["distance"] = -0.2
        errors = error_paths(tank_doc)
        assert any(path.startswith("$.scene.objects") for path in errors)

    def test_wrongly_typed_material_fields(self, tank_doc):
        tank_doc["scene"]["objects"][0]["material"] = {"rho_vis": "high", "rho_nir": 0.5, "pattern": 3}
        errors = error_paths(tank_doc)
        assert errors["$.scene.objects[0].material.rho_vis"] == "expected a number, got str"
        assert errors["$.scene.objects[0].material.pattern"] == "expected a string"

    def test_unknown_region_weight(self, tank_doc):
        tank_doc["fusion"] = {"mode": "regions", "region_weights": {"lake": 0.5}}
        assert "$.fusion.region_weights.lake" in error_paths(tank_doc)

    def test_weight_map_file_must_exist(self, tank_doc, tmp_path):
        tank_doc["fusion"] = {"mode": "weight_map", "weight_map_path": "missing.pgm"}
        assert "$.fusion.weight_map_path" in error_paths(tank_doc, tmp_path)

    def test_not_an_object(self):
        assert "$" in error_paths([1, 2, 3])

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{\"name\": ")
        with pytest.raises(ConfigValidationError, match="invalid JSON"):
            load_config(path)


class TestWater:
    def test_preset_and_default(self):
        assert parse_water({"preset": "clear"}).phase.g == 0.8
        assert parse_water({}).coefficients["vis"].b == 0.6

    def test_inline_coefficients(self, tank_doc):
        tank_doc["water"] = {
            "coefficients": {"vis": {"a": 0.1, "b": 0.4}, "nir": {"a": 2.0, "b": 0.02}},
            "phase_g": 0.5,
            "ambient_veiling": {"vis": 0.2, "nir": 0.2},
        }
        water = load_config_dict(tank_doc).water
        assert water.coefficients_for("nir").c == pytest.approx(2.02)
        assert water.phase.g == 0.5

    def test_ordering_violation(self, tank_doc):
        tank_doc["water"] = {"coefficients": {"vis": {"a": 2.0, "b": 0.4}, "nir": {"a": 1.0, "b": 0.02}}}
        assert "a(nir) > a(vis)" in error_paths(tank_doc)["$.water"]


class TestOutputAndOverrides:
    def test_scene_path(self, tank_doc, tmp_path):
        (tmp_path / "scene.json").write_text(json.dumps(tank_doc.pop("scene")))
        tank_doc["scene_path"] = "scene.json"
        config = load_config_dict(tank_doc, tmp_path)
        assert config.scene.width == 256

    def test_scene_and_scene_path_conflict(self, tank_doc):
        tank_doc["scene_path"] = "scene.json"
        assert "$.scene_path" in error_paths(tank_doc)

    def test_environment_overrides_output_dir(self, tank_doc, monkeypatch):
        tank_doc["output_dir"] = "runs/a"
        assert load_config_dict(tank_doc).output_dir == "runs/a"
        monkeypatch.setenv(Config.OUT_DIR_ENV, "/tmp/forced")
        assert load_config_dict(tank_doc).output_dir == "/tmp/forced"

    def test_with_overrides(self, tank_config):
        changed = with_overrides(tank_config, seed=99, out_dir="elsewhere")
        assert changed.acquisition.seed == 99
        assert changed.output_dir == "elsewhere"
        assert tank_config.acquisition.seed == 7
        assert with_overrides(tank_config) is tank_config

    def test_explicit_matrix(self, tank_doc):
        doc = copy.deepcopy(tank_doc)
        doc["acquisition"]["nir_misalignment"] = {"matrix": [1, 0, 3, 0, 1, 0, 0, 0, 1]}
        assert load_config_dict(doc).acquisition.nir_misalignment.matrix[0, 2] == 3.0
