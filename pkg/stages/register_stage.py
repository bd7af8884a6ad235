from typing import Any, Dict
import logging

from imaging.registration_fusion import register_pair, reprojection_rms
from stages.base_stage import BaseStage
from utils.errors import RegistrationError
from utils.report_schema import StageResult

logger = logging.getLogger(__name__)


class RegisterStage(BaseStage):
    """Aligns the NIR image to the VIS grid on the chessboard marker.

    A marker that cannot be found is reported in the summary rather than aborting
    the run; later stages see `registered == False`.
    """

    def __init__(self, out_dir=None):
        super().__init__("register", out_dir)

    def process(self, context: Dict[str, Any]) -> StageResult:
        config = context["config"]
        context["registered"] = False
        if not config.registration.enabled:
            logger.info("registration disabled by configuration")
            return StageResult(stage=self.name, ok=True, summary={"enabled": False})

        try:
            result = register_pair(context["vis"], context["nir"], config.registration.board)
        except RegistrationError as e:
            logger.warning(f"registration failed: {e}")
            summary = {"enabled": True, "error": str(e), "diagnostics": dict(sorted(e.diagnostics.items()))}
            context["registration"] = summary
            return StageResult(stage=self.name, ok=False, summary=summary)

        context.update(registered=True, nir_registered=result.nir_registered, H_est=result.H_est)
        summary = {"enabled": True, **result.to_dict()}
        true_H = context.get("true_H")
        if true_H is not None:
            summary["rms_vs_truth"] = reprojection_rms(result.H_est, true_H, result.vis_corners)
            logger.info(f"corner RMS against simulator truth: {summary['rms_vs_truth']:.4f} px")
        context["registration"] = summary

        self.write_image("nir_registered.pgm", result.nir_registered)
        self.write_json("H_est.json", result.H_est.to_list())
        return StageResult(stage=self.name, ok=True, summary=summary)
