from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from config import Config
from optics.renderer import AcquisitionModel
from optics.scene_model import SceneSpec
from optics.water_optics import WaterBody


@dataclass
class AnalysisParams:
    canny_sigma: float = Config.CANNY_SIGMA
    canny_low: float = Config.CANNY_LOW
    canny_high: float = Config.CANNY_HIGH
    edge_margin: int = Config.EDGE_MARGIN
    brightness_margin: float = Config.BRIGHTNESS_MARGIN

    def to_dict(self) -> Dict[str, Any]:
        return {
            "canny_sigma": self.canny_sigma,
            "canny_low": self.canny_low,
            "canny_high": self.canny_high,
            "edge_margin": self.edge_margin,
            "brightness_margin": self.brightness_margin,
        }


@dataclass
class RegistrationParams:
    enabled: bool = True
    board: Tuple[int, int] = Config.BOARD

    def to_dict(self) -> Dict[str, Any]:
        return {"enabled": self.enabled, "board": list(self.board)}


@dataclass
class FusionParams:
    enabled: bool = True
    mode: str = "plant_mask"
    delta: float = Config.PLANT_DELTA
    alpha: float = Config.PLANT_ALPHA
    region_weights: Dict[str, float] = field(default_factory=dict)
    weight_map_path: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "enabled": self.enabled,
            "mode": self.mode,
            "delta": self.delta,
            "alpha": self.alpha,
            "region_weights": dict(self.region_weights),
            "weight_map_path": self.weight_map_path,
        }


@dataclass
class PipelineConfig:
    name: str
    scene: SceneSpec
    acquisition: AcquisitionModel
    analysis: AnalysisParams = field(default_factory=AnalysisParams)
    registration: RegistrationParams = field(default_factory=RegistrationParams)
    fusion: FusionParams = field(default_factory=FusionParams)
    output_dir: str = Config.DEFAULT_OUT_DIR

    @property
    def water(self) -> WaterBody:
        return self.scene.water


@dataclass
class StageResult:
    stage: str
    ok: bool
    summary: Dict[str, Any] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "ok": self.ok,
            "summary": self.summary,
            "artifacts": dict(sorted(self.artifacts.items())),
        }


@dataclass
class ClaimResult:
    claim: str
    passed: bool
    measured: Dict[str, Any] = field(default_factory=dict)
    description: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "claim": self.claim,
            "description": self.description or Config.CLAIMS.get(self.claim, ""),
            "passed": self.passed,
            "measured": self.measured,
        }


@dataclass
class RunReport:
    name: str
    seed: int
    bands: Dict[str, Dict[str, float]] = field(default_factory=dict)
    regions: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    registration: Optional[Dict[str, Any]] = None
    fusion: Optional[Dict[str, Any]] = None
    claims: List[ClaimResult] = field(default_factory=list)
    stages: List[StageResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(claim.passed for claim in self.claims)

    @property
    def failed_claims(self) -> List[str]:
        return [claim.claim for claim in self.claims if not claim.passed]

    def artifacts(self) -> Dict[str, str]:
        digests: Dict[str, str] = {}
        for stage in self.stages:
            digests.update(stage.artifacts)
        return dict(sorted(digests.items()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "version": Config.VERSION,
            "seed": self.seed,
            "bands": self.bands,
            "regions": self.regions,
            "registration": self.registration,
            "fusion": self.fusion,
            "claims": [claim.to_dict() for claim in self.claims],
            "all_claims_passed": self.passed,
            "stages": [stage.to_dict() for stage in self.stages],
            "artifacts": self.artifacts(),
        }
