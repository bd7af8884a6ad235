import dataclasses
import hashlib
import json

import numpy as np
import pandas as pd
import pytest

from stages.analyze_stage import AnalyzeStage
from stages.fuse_stage import FuseStage
from stages.pipeline import REPORT_NAME, run_pipeline
from stages.register_stage import RegisterStage
from stages.simulate_stage import SimulateStage
from utils.errors import StageError
from utils.pgm_io import read_pgm

TANK_CLAIMS = {
    "nir_darker", "vis_lower_contrast", "plant_edges_nir", "registration_accuracy", "plant_removal",
}
FABRIC_CLAIMS = {
    "nir_darker", "vis_lower_contrast", "fabric_dye_invisible_nir", "black_fabric_nir", "registration_accuracy",
}


def claims_by_id(report):
    return {claim.claim: claim for claim in report.claims}


class TestTankScene:
    def test_claims_pass(self, tank_run):
        report, _ = tank_run
        claims = claims_by_id(report)
        assert set(claims) == TANK_CLAIMS
        assert report.failed_claims == []

    def test_registration_accuracy(self, tank_run):
        report, _ = tank_run
        assert report.registration["corners"] == 16
        assert report.registration["fit_rms"] < 0.5
        assert report.registration["rms_vs_truth"] < 0.5

    def test_plant_removal_measurements(self, tank_run):
        fusion = tank_run[0].fusion
        assert fusion["plant_mask_iou"] >= 0.8
        assert fusion["plant_edges_fused"] < fusion["plant_edges_vis"]

    def test_artifacts_on_disk(self, tank_run):
        report, out = tank_run
        expected = {
            "vis.pgm", "nir.pgm", "truth.json", "histogram_vis.csv", "histogram_nir.csv", "stats.json",
            "overlay.pgm", "edges_vis.pgm", "edges_nir.pgm", "nir_registered.pgm", "H_est.json",
            "weights.pgm", "fused.pgm",
        }
        digests = report.artifacts()
        assert set(digests) == expected
        for name, digest in digests.items():
            assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest

    def test_report_file(self, tank_run):
        report, out = tank_run
        written = json.loads((out / REPORT_NAME).read_text())
        assert written["all_claims_passed"] is True
        assert written["seed"] == 7
        assert [stage["stage"] for stage in written["stages"]] == ["simulate", "analyze", "register", "fuse"]
        assert written["artifacts"] == report.artifacts()

    def test_histogram_tables(self, tank_run):
        _, out = tank_run
        for band in ("vis", "nir"):
            table = pd.read_csv(out / f"histogram_{band}.csv")
            assert len(table) == 256
            assert table["count"].sum() == 256 * 256

    def test_truth_records_misalignment(self, tank_run, tank_config):
        truth = json.loads((tank_run[1] / "truth.json").read_text())
        assert truth["true_H"] == tank_config.acquisition.nir_misalignment.to_list()
        assert truth["regions"]["plant"]["visible_pixels"] > 0

    def test_same_seed_reproduces_every_byte(self, tank_config, tank_run, tmp_path):
        _, first = tank_run
        run_pipeline(tank_config, tmp_path)
        for name in [REPORT_NAME, *tank_run[0].artifacts()]:
            assert (tmp_path / name).read_bytes() == (first / name).read_bytes(), name

    def test_other_seed_changes_images(self, tank_config, tank_run, tmp_path):
        reseeded = dataclasses.replace(
            tank_config, acquisition=dataclasses.replace(tank_config.acquisition, seed=8)
        )
        report = run_pipeline(reseeded, tmp_path)
        assert report.artifacts()["vis.pgm"] != tank_run[0].artifacts()["vis.pgm"]


class TestFabricScene:
    def test_claims_pass(self, fabric_run):
        report, _ = fabric_run
        assert set(claims_by_id(report)) == FABRIC_CLAIMS
        assert report.failed_claims == []

    def test_dye_pattern_only_in_vis(self, fabric_run):
        edges = fabric_run[0].regions["fabric_blobs"]["interior_edges"]
        assert edges["vis"] > 0
        assert edges["vis"] >= 10 * edges["nir"]

    def test_region_fusion_weights(self, fabric_run, fabric_config):
        _, out = fabric_run
        weights = read_pgm(out / "weights.pgm").pixels
        x, y, w, h = fabric_config.scene.regions()["black_fabric"]
        assert (weights[y:y + h, x:x + w] == 192).all()
        assert (weights == 192).sum() == w * h
        assert set(np.unique(weights)) == {128, 192}


class TestStages:
    def test_fuse_refuses_misaligned_input(self, tank_config, tmp_path):
        config = dataclasses.replace(
            tank_config, registration=dataclasses.replace(tank_config.registration, enabled=False)
        )
        with pytest.raises(StageError) as info:
            run_pipeline(config, tmp_path)
        assert info.value.stage == "fuse"
        assert not (tmp_path / REPORT_NAME).exists()

    def test_disabled_stages_skip_their_claims(self, tank_config, tmp_path):
        config = dataclasses.replace(
            tank_config,
            registration=dataclasses.replace(tank_config.registration, enabled=False),
            fusion=dataclasses.replace(tank_config.fusion, enabled=False),
        )
        report = run_pipeline(config, tmp_path)
        claims = claims_by_id(report)
        assert "registration_accuracy" not in claims and "plant_removal" not in claims
        assert not (tmp_path / "fused.pgm").exists()

    def test_stages_without_output_dir(self, tank_config):
        context = {"config": tank_config}
        for stage in (SimulateStage(), AnalyzeStage(), RegisterStage(), FuseStage()):
            result = stage.run(context)
            assert result.ok
            assert result.artifacts == {}
        assert context["registered"] is True
        assert context["fused"].shape == (256, 256)

    def test_registration_failure_is_reported(self, tank_config, tmp_path):
        config = dataclasses.replace(
            tank_config,
            registration=dataclasses.replace(tank_config.registration, board=(7, 7)),
            fusion=dataclasses.replace(tank_config.fusion, enabled=False),
        )
        report = run_pipeline(config, tmp_path)
        assert "error" in report.registration
        assert claims_by_id(report)["registration_accuracy"].passed is False
        assert report.stages[2].ok is False
