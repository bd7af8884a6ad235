from typing import Any, Dict, Optional
import logging

import numpy as np

from imaging.image_ops import canny, edge_counts, edge_overlay, edge_to_gray, histogram, overlay_to_gray, region_stats
from imaging.raster import GrayImage, Rect, shrink_rect
from stages.base_stage import BaseStage
from utils.report_schema import AnalysisParams, StageResult

logger = logging.getLogger(__name__)


def _joint_valid(vis: GrayImage, nir: GrayImage) -> Optional[np.ndarray]:
    masks = [m for m in (vis.valid, nir.valid) if m is not None]
    if not masks:
        return None
    return np.logical_and.reduce(masks)


def _masked_stats(img: GrayImage, mask: Optional[np.ndarray]) -> Dict[str, float]:
    if mask is None or not mask.any():
        return region_stats(img)
    values = img.as_float()[mask]
    return {
        "mean": float(values.mean()),
        "std": float(values.std()),
        "min": float(values.min()),
        "max": float(values.max()),
    }


def measure_pair(vis: GrayImage, nir: GrayImage, regions: Dict[str, Rect], params: AnalysisParams) -> Dict[str, Any]:
    """Brightness, contrast and edge measurements of a channel pair with shared Canny thresholds."""
    edges_vis = canny(vis, params.canny_sigma, params.canny_low, params.canny_high)
    edges_nir = canny(nir, params.canny_sigma, params.canny_low, params.canny_high)
    overlay = edge_overlay(edges_nir, edges_vis)
    valid = _joint_valid(vis, nir)

    region_report: Dict[str, Any] = {}
    for label, rect in sorted(regions.items()):
        interior = shrink_rect(rect, params.edge_margin)
        region_report[label] = {
            "rect": [int(v) for v in rect],
            "vis": region_stats(vis, rect),
            "nir": region_stats(nir, rect),
            "interior_vis": region_stats(vis, interior),
            "interior_nir": region_stats(nir, interior),
            "edges": edge_counts(overlay, rect),
            "interior_edges": {"vis": edges_vis.count(interior), "nir": edges_nir.count(interior)},
        }

    return {
        "bands": {"vis": _masked_stats(vis, valid), "nir": _masked_stats(nir, valid)},
        "regions": region_report,
        "edges": {"vis": edges_vis.count(), "nir": edges_nir.count(), **edge_counts(overlay)},
        "edges_vis": edges_vis,
        "edges_nir": edges_nir,
        "overlay": overlay,
    }


class AnalyzeStage(BaseStage):
    """Histogram, region statistics and NIR/VIS edge comparison"""

    def __init__(self, out_dir=None):
        super().__init__("analyze", out_dir)

    def process(self, context: Dict[str, Any]) -> StageResult:
        config = context["config"]
        vis: GrayImage = context["vis"]
        nir: GrayImage = context["nir_registered"] if context.get("registered") else context["nir"]
        measured = measure_pair(vis, nir, config.scene.regions(), config.analysis)
        context["analysis"] = measured

        for band, img in (("vis", vis), ("nir", nir)):
            self.write_table(f"histogram_{band}.csv", histogram(img).to_frame())
        self.write_json("stats.json", {"bands": measured["bands"], "regions": measured["regions"]})
        self.write_image("overlay.pgm", overlay_to_gray(measured["overlay"]))
        self.write_image("edges_vis.pgm", edge_to_gray(measured["edges_vis"]))
        self.write_image("edges_nir.pgm", edge_to_gray(measured["edges_nir"]))

        logger.info(
            f"edges: {measured['edges']['vis']} VIS, {measured['edges']['nir']} NIR "
            f"(sigma {config.analysis.canny_sigma}, thresholds {config.analysis.canny_low}/{config.analysis.canny_high})"
        )
        return StageResult(
            stage=self.name,
            ok=True,
            summary={"bands": measured["bands"], "edges": measured["edges"]},
        )
