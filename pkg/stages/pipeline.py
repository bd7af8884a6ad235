"""simulate -> analyze -> register -> fuse, then the qualitative claim checklist."""
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import logging

from config import Config
from stages.analyze_stage import AnalyzeStage, measure_pair
from stages.base_stage import dump_json
from stages.fuse_stage import FuseStage
from stages.register_stage import RegisterStage
from stages.simulate_stage import SimulateStage
from utils.report_schema import ClaimResult, PipelineConfig, RunReport

logger = logging.getLogger(__name__)

REPORT_NAME = "report.json"


def _contrast(stats: Dict[str, float]) -> float:
    return stats["std"] / stats["mean"] if stats["mean"] > 0 else 0.0


def evaluate_claims(config: PipelineConfig, context: Dict[str, Any]) -> List[ClaimResult]:
    """Check each qualitative channel claim whose region exists in the scene."""
    measured = context["claim_measurements"]
    bands = measured["bands"]
    regions = measured["regions"]
    params = config.analysis
    claims: List[ClaimResult] = []

    mean_vis, mean_nir = bands["vis"]["mean"], bands["nir"]["mean"]
    claims.append(ClaimResult(
        "nir_darker",
        mean_nir + params.brightness_margin <= mean_vis,
        {"mean_vis": mean_vis, "mean_nir": mean_nir, "margin": params.brightness_margin},
    ))

    if "marker" in regions:
        cv_vis = _contrast(regions["marker"]["vis"])
        cv_nir = _contrast(regions["marker"]["nir"])
        claims.append(ClaimResult("vis_lower_contrast", cv_vis < cv_nir, {"cv_vis": cv_vis, "cv_nir": cv_nir}))

    if "plant" in regions:
        counts = regions["plant"]["edges"]
        claims.append(ClaimResult("plant_edges_nir", counts["nir_only"] > counts["vis_only"], dict(counts)))

    if "fabric_blobs" in regions:
        edges = regions["fabric_blobs"]["interior_edges"]
        passed = edges["vis"] > 0 and edges["vis"] >= Config.FABRIC_EDGE_RATIO * edges["nir"]
        claims.append(ClaimResult(
            "fabric_dye_invisible_nir", passed, {**edges, "ratio": Config.FABRIC_EDGE_RATIO}
        ))

    if "black_fabric" in regions:
        region = regions["black_fabric"]
        difference = region["interior_nir"]["mean"] - region["interior_vis"]["mean"]
        claims.append(ClaimResult(
            "black_fabric_nir",
            difference >= Config.BLACK_FABRIC_MARGIN,
            {"nir_minus_vis": difference, "margin": Config.BLACK_FABRIC_MARGIN},
        ))

    if config.registration.enabled:
        registration = context.get("registration") or {}
        rms = registration.get("rms_vs_truth")
        claims.append(ClaimResult(
            "registration_accuracy",
            rms is not None and rms < Config.REGISTRATION_RMS_LIMIT,
            {"rms_vs_truth": rms, "limit": Config.REGISTRATION_RMS_LIMIT},
        ))

    fusion = context.get("fusion") or {}
    if "plant_mask_iou" in fusion:
        passed = (
            fusion["plant_edges_fused"] < fusion["plant_edges_vis"]
            and fusion["plant_mask_iou"] >= Config.PLANT_IOU_MIN
        )
        claims.append(ClaimResult(
            "plant_removal",
            passed,
            {
                "edges_vis": fusion["plant_edges_vis"],
                "edges_fused": fusion["plant_edges_fused"],
                "mask_iou": fusion["plant_mask_iou"],
                "iou_min": Config.PLANT_IOU_MIN,
            },
        ))

    for claim in claims:
        level = logging.INFO if claim.passed else logging.WARNING
        logger.log(level, f"claim {claim.claim}: {'pass' if claim.passed else 'FAIL'} {claim.measured}")
    return claims


def run_pipeline(config: PipelineConfig, out_dir: Optional[Union[str, Path]] = None) -> RunReport:
    """Run every stage, write all artifacts plus report.json, and return the report."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    context: Dict[str, Any] = {"config": config}
    for stage in (SimulateStage(out), AnalyzeStage(out), RegisterStage(out), FuseStage(out)):
        stage.run(context)

    if context.get("registered"):
        measured = measure_pair(context["vis"], context["nir_registered"], config.scene.regions(), config.analysis)
    else:
        measured = context["analysis"]
    context["claim_measurements"] = measured

    report = RunReport(
        name=config.name,
        seed=config.acquisition.seed,
        bands=measured["bands"],
        regions=measured["regions"],
        registration=context.get("registration"),
        fusion=context.get("fusion"),
        claims=evaluate_claims(config, context),
        stages=context["stages"],
    )
    out.mkdir(parents=True, exist_ok=True)
    (out / REPORT_NAME).write_text(dump_json(report.to_dict()))
    logger.info(
        f"pipeline '{config.name}' finished: {len(report.claims) - len(report.failed_claims)}/"
        f"{len(report.claims)} claims passed, report in {out / REPORT_NAME}"
    )
    return report
