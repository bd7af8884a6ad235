from typing import Any, Dict
import logging

from optics.renderer import acquire_pair
from optics.scene_model import region_table
from stages.base_stage import BaseStage
from utils.report_schema import PipelineConfig, StageResult

logger = logging.getLogger(__name__)


class SimulateStage(BaseStage):
    """Renders the VIS/NIR pair for the configured scene and water body"""

    def __init__(self, out_dir=None):
        super().__init__("simulate", out_dir)

    def process(self, context: Dict[str, Any]) -> StageResult:
        config: PipelineConfig = context["config"]
        vis, nir, true_H = acquire_pair(config.scene, config.water, config.acquisition)
        context.update(vis=vis, nir=nir, true_H=true_H)

        truth = {
            "scene": config.scene.name,
            "seed": config.acquisition.seed,
            "size": [config.scene.width, config.scene.height],
            "true_H": true_H.to_list(),
            "regions": region_table(config.scene),
        }
        self.write_image("vis.pgm", vis)
        self.write_image("nir.pgm", nir)
        self.write_json("truth.json", truth)

        return StageResult(
            stage=self.name,
            ok=True,
            summary={
                "mean_vis": float(vis.pixels.mean()),
                "mean_nir": float(nir.pixels.mean()),
                "misaligned": not true_H.is_identity(),
            },
        )
