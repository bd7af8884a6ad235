from typing import Any, Dict
import logging

import numpy as np

from imaging.image_ops import canny
from imaging.registration_fusion import (
    WeightMap,
    fuse_weighted,
    mask_iou,
    plant_mask,
    weightmap_from_gray,
    weightmap_to_gray,
    weights_from_regions,
)
from optics.scene_model import label_masks
from stages.base_stage import BaseStage
from utils.errors import StageError
from utils.pgm_io import read_pgm
from utils.report_schema import PipelineConfig, StageResult

logger = logging.getLogger(__name__)


class FuseStage(BaseStage):
    """Adds (or subtracts) weighted NIR content to the VIS image"""

    def __init__(self, out_dir=None):
        super().__init__("fuse", out_dir)

    def _inputs_aligned(self, context: Dict[str, Any]) -> bool:
        if context.get("registered") or context.get("aligned"):
            return True
        true_H = context.get("true_H")
        return true_H is not None and true_H.is_identity()

    def build_weights(self, config: PipelineConfig, context: Dict[str, Any]) -> WeightMap:
        vis, nir = context["vis"], context["fusion_nir"]
        params = config.fusion
        if params.mode == "plant_mask":
            return plant_mask(nir, vis, params.delta, params.alpha)
        if params.mode == "regions":
            return weights_from_regions(vis.shape, config.scene.regions(), params.region_weights)
        weights = weightmap_from_gray(read_pgm(params.weight_map_path))
        if weights.shape != vis.shape:
            raise StageError(self.name, f"weight map is {weights.shape}, images are {vis.shape}")
        return weights

    def process(self, context: Dict[str, Any]) -> StageResult:
        config: PipelineConfig = context["config"]
        if not config.fusion.enabled:
            logger.info("fusion disabled by configuration")
            return StageResult(stage=self.name, ok=True, summary={"enabled": False})
        if not self._inputs_aligned(context):
            raise StageError(self.name, "refusing to fuse unregistered inputs: NIR is misaligned with VIS")

        vis = context["vis"]
        context["fusion_nir"] = context["nir_registered"] if context.get("registered") else context["nir"]
        weights = self.build_weights(config, context)
        fused = fuse_weighted(vis, context["fusion_nir"], weights)
        context.update(fused=fused, weights=weights)

        summary: Dict[str, Any] = {
            "enabled": True,
            "mode": config.fusion.mode,
            "weighted_pixels": int(np.count_nonzero(weights.weights)),
            "mean_fused": float(fused.pixels.mean()),
        }
        regions = config.scene.regions()
        if config.fusion.mode == "plant_mask" and "plant" in regions:
            params = config.analysis
            plant_rect = regions["plant"]
            summary["plant_mask_iou"] = mask_iou(weights, label_masks(config.scene)["plant"])
            summary["plant_edges_vis"] = canny(vis, params.canny_sigma, params.canny_low, params.canny_high).count(plant_rect)
            summary["plant_edges_fused"] = canny(fused, params.canny_sigma, params.canny_low, params.canny_high).count(plant_rect)
            logger.info(
                f"plant removal: IoU {summary['plant_mask_iou']:.3f}, "
                f"edges {summary['plant_edges_vis']} -> {summary['plant_edges_fused']}"
            )
        context["fusion"] = summary

        self.write_image("weights.pgm", weightmap_to_gray(weights))
        self.write_image("fused.pgm", fused)
        return StageResult(stage=self.name, ok=True, summary=summary)
