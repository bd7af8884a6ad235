"""Pipeline configuration documents (JSON) to validated PipelineConfig objects.

Problems are collected with their JSON path (``$.analysis.canny_low``) and raised
together as one ConfigValidationError.
"""
import dataclasses
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from config import Config
from imaging.registration_fusion import Homography
from optics.renderer import AcquisitionModel
from optics.scene_model import (
    Background,
    LightSource,
    Material,
    SceneObject,
    SceneSpec,
    builtin_materials,
    validate_scene,
)
from optics.water_optics import (
    ChannelBand,
    OpticalCoefficients,
    PhaseFunction,
    WaterBody,
    band_presets,
    water_presets,
)
from utils.errors import ConfigValidationError, DualBandError
from utils.report_schema import AnalysisParams, FusionParams, PipelineConfig, RegistrationParams
from utils.validators import ConfigValidator

logger = logging.getLogger(__name__)

FUSION_MODES = ("plant_mask", "regions", "weight_map")
TOP_LEVEL_KEYS = {
    "name", "scene", "scene_path", "water", "acquisition", "analysis", "registration", "fusion", "output_dir",
}
MATERIAL_KEYS = {f.name for f in dataclasses.fields(Material)}
MATERIAL_TEXT_KEYS = {"name", "pattern"}

Check = Callable[[Any], Tuple[bool, str]]


class _DocumentReader:
    """Typed field access that records problems instead of raising."""

    def __init__(self):
        self.errors: List[Tuple[str, str]] = []
        self.validator = ConfigValidator()

    def error(self, path: str, message: str):
        self.errors.append((path, message))

    def check(self, path: str, result: Tuple[bool, str]) -> bool:
        ok, message = result
        if not ok:
            self.error(path, message)
        return ok

    def section(self, doc: Dict[str, Any], key: str, path: str, required: bool = False) -> Dict[str, Any]:
        if key not in doc:
            if required:
                self.error(path, "required section is missing")
            return {}
        value = doc[key]
        if not isinstance(value, dict):
            self.error(path, f"expected an object, got {type(value).__name__}")
            return {}
        return value

    def number(self, doc: Dict[str, Any], key: str, default: Optional[float], path: str, *checks: Check) -> Optional[float]:
        if key not in doc:
            if default is None:
                self.error(path, "required value is missing")
            return default
        value = doc[key]
        if not self.check(path, self.validator.validate_number(value)):
            return default
        for check in checks:
            if not self.check(path, check(value)):
                return default
        return float(value)

    def integer(self, doc: Dict[str, Any], key: str, default: Optional[int], path: str, minimum: int = None) -> Optional[int]:
        if key not in doc:
            if default is None:
                self.error(path, "required value is missing")
            return default
        value = doc[key]
        if not self.check(path, self.validator.validate_integer(value, minimum)):
            return default
        return int(value)

    def boolean(self, doc: Dict[str, Any], key: str, default: bool, path: str) -> bool:
        value = doc.get(key, default)
        if not isinstance(value, bool):
            self.error(path, f"expected true or false, got {value!r}")
            return default
        return value


def parse_water(doc: Dict[str, Any], reader: Optional[_DocumentReader] = None, path: str = "$.water") -> Optional[WaterBody]:
    """Water body from `{"preset": name}` or inline coefficients; None when invalid."""
    reader = reader or _DocumentReader()
    presets = water_presets()
    if not doc:
        return presets["natural"]
    if "preset" in doc:
        name = doc["preset"]
        if reader.check(f"{path}.preset", ConfigValidator.validate_choice(name, tuple(sorted(presets)))):
            return presets[name]
        return None

    coefficients: Dict[str, OpticalCoefficients] = {}
    coeff_doc = reader.section(doc, "coefficients", f"{path}.coefficients", required=True)
    for band, entry in coeff_doc.items():
        entry_path = f"{path}.coefficients.{band}"
        if not isinstance(entry, dict):
            reader.error(entry_path, "expected an object with 'a' and 'b'")
            continue
        a = reader.number(entry, "a", None, f"{entry_path}.a", ConfigValidator.validate_nonnegative)
        b = reader.number(entry, "b", None, f"{entry_path}.b", ConfigValidator.validate_nonnegative)
        if a is not None and b is not None:
            coefficients[band] = OpticalCoefficients(a=a, b=b)

    g = reader.number(doc, "phase_g", 0.0, f"{path}.phase_g")
    veiling_doc = reader.section(doc, "ambient_veiling", f"{path}.ambient_veiling")
    veiling = {}
    for band in veiling_doc:
        value = reader.number(veiling_doc, band, None, f"{path}.ambient_veiling.{band}", ConfigValidator.validate_nonnegative)
        if value is not None:
            veiling[band] = value
    enforce = reader.boolean(doc, "enforce_orderings", True, f"{path}.enforce_orderings")
    try:
        return WaterBody(coefficients, PhaseFunction(g), veiling, enforce)
    except DualBandError as e:
        reader.error(path, str(e))
        return None


def _parse_bands(doc: Dict[str, Any], reader: _DocumentReader, path: str) -> List[ChannelBand]:
    presets = band_presets()
    entries = doc.get("bands", ["vis", "nir"])
    if not isinstance(entries, list):
        reader.error(path, "expected a list of bands")
        return list(presets.values())
    bands = []
    for index, entry in enumerate(entries):
        entry_path = f"{path}[{index}]"
        if isinstance(entry, str):
            if reader.check(entry_path, ConfigValidator.validate_choice(entry, tuple(sorted(presets)))):
                bands.append(presets[entry])
        elif isinstance(entry, dict):
            try:
                bands.append(ChannelBand(
                    str(entry.get("name", "")),
                    float(entry.get("lambda_min", 0)),
                    float(entry.get("lambda_peak", 0)),
                    float(entry.get("lambda_max", 0)),
                ))
            except (DualBandError, TypeError, ValueError) as e:
                reader.error(entry_path, str(e))
        else:
            reader.error(entry_path, "expected a preset name or a band object")
    return bands


def _parse_material(value: Any, reader: _DocumentReader, path: str) -> Optional[Material]:
    catalog = builtin_materials()
    if isinstance(value, str):
        if value not in catalog:
            reader.error(path, f"unknown material '{value}'")
            return None
        return catalog[value]
    if isinstance(value, dict):
        unknown = set(value) - MATERIAL_KEYS
        if unknown:
            reader.error(path, f"unknown material fields: {', '.join(sorted(unknown))}")
            return None
        fields_ok = True
        for key in sorted(set(value) - MATERIAL_TEXT_KEYS):
            fields_ok = reader.check(f"{path}.{key}", ConfigValidator.validate_number(value[key])) and fields_ok
        for key in sorted(set(value) & MATERIAL_TEXT_KEYS):
            if not isinstance(value[key], str):
                reader.error(f"{path}.{key}", "expected a string")
                fields_ok = False
        if not fields_ok:
            return None
        try:
            return Material(**{"name": "custom", **value})
        except TypeError as e:
            reader.error(path, str(e))
            return None
    reader.error(path, "expected a material name or object")
    return None


def _parse_light(acq_doc: Dict[str, Any], reader: _DocumentReader, path: str) -> LightSource:
    power = acq_doc.get("light_power", Config.DEFAULT_LIGHT_POWER)
    if isinstance(power, dict):
        levels = {}
        for band in power:
            value = reader.number(power, band, None, f"{path}.light_power.{band}", ConfigValidator.validate_positive)
            if value is not None:
                levels[band] = value
    else:
        value = reader.number(acq_doc, "light_power", Config.DEFAULT_LIGHT_POWER, f"{path}.light_power",
                              ConfigValidator.validate_positive)
        levels = {"vis": value, "nir": value}
    colocated = reader.boolean(acq_doc, "colocated_light", True, f"{path}.colocated_light")
    return LightSource(power=levels, colocated=colocated)


def parse_scene(
    doc: Dict[str, Any], water: WaterBody, light: LightSource, reader: _DocumentReader, path: str = "$.scene"
) -> Optional[SceneSpec]:
    first_error = len(reader.errors)
    width = reader.integer(doc, "width", Config.IMAGE_SIZE, f"{path}.width", minimum=1)
    height = reader.integer(doc, "height", Config.IMAGE_SIZE, f"{path}.height", minimum=1)
    bands = _parse_bands(doc, reader, f"{path}.bands")

    bg_doc = reader.section(doc, "background", f"{path}.background", required=True)
    bg_material = _parse_material(bg_doc.get("material", "black_background"), reader, f"{path}.background.material")
    bg_distance = reader.number(bg_doc, "distance", None, f"{path}.background.distance")

    objects: List[SceneObject] = []
    entries = doc.get("objects")
    if not isinstance(entries, list) or not entries:
        reader.error(f"{path}.objects", "expected a non-empty list of objects")
        entries = []
    for index, entry in enumerate(entries):
        obj_path = f"{path}.objects[{index}]"
        if not isinstance(entry, dict):
            reader.error(obj_path, "expected an object")
            continue
        material = _parse_material(entry.get("material"), reader, f"{obj_path}.material")
        distance = reader.number(entry, "distance", None, f"{obj_path}.distance")
        rect = entry.get("rect")
        rect_ok = reader.check(f"{obj_path}.rect", ConfigValidator.validate_rect(rect))
        z_order = reader.integer(entry, "z_order", index, f"{obj_path}.z_order")
        label = entry.get("label", "")
        if not isinstance(label, str):
            reader.error(f"{obj_path}.label", "expected a string")
            label = ""
        if material is not None and distance is not None and rect_ok:
            objects.append(SceneObject(material, distance, tuple(rect), z_order, label))

    if bg_material is None or bg_distance is None or len(reader.errors) > first_error:
        return None
    scene = SceneSpec(
        width=width,
        height=height,
        objects=objects,
        background=Background(bg_material, bg_distance),
        light=light,
        water=water,
        bands=bands,
        name=str(doc.get("name", "scene")),
    )
    for violation in validate_scene(scene):
        if violation.path.startswith("water"):
            reader.error(f"$.{violation.path}", violation.message)
        else:
            reader.error(path + violation.path[len("scene"):], violation.message)
    return scene


def _parse_misalignment(doc: Any, width: int, height: int, reader: _DocumentReader, path: str) -> Homography:
    if doc is None:
        return Homography.identity()
    if not isinstance(doc, dict):
        reader.error(path, "expected an object")
        return Homography.identity()
    try:
        if "matrix" in doc:
            return Homography.from_list(doc["matrix"])
        tx = reader.number(doc, "tx", 0.0, f"{path}.tx")
        ty = reader.number(doc, "ty", 0.0, f"{path}.ty")
        rotation = reader.number(doc, "rotation_deg", 0.0, f"{path}.rotation_deg")
        return Homography.from_misalignment(tx, ty, rotation, center=((width - 1) / 2.0, (height - 1) / 2.0))
    except (DualBandError, TypeError, ValueError) as e:
        reader.error(path, str(e))
        return Homography.identity()


def _parse_acquisition(doc: Dict[str, Any], width: int, height: int, reader: _DocumentReader) -> Optional[AcquisitionModel]:
    path = "$.acquisition"
    fields = {
        "gain": reader.number(doc, "gain", Config.DEFAULT_GAIN, f"{path}.gain", ConfigValidator.validate_positive),
        "noise_sigma": reader.number(doc, "noise_sigma", Config.DEFAULT_NOISE_SIGMA, f"{path}.noise_sigma",
                                     ConfigValidator.validate_nonnegative),
        "seed": reader.integer(doc, "seed", Config.DEFAULT_SEED, f"{path}.seed", minimum=0),
        "interface_transmittance": reader.number(
            doc, "interface_transmittance", Config.GLASS_TRANSMITTANCE, f"{path}.interface_transmittance",
            lambda v: ConfigValidator.validate_unit_interval(v, open_low=True),
        ),
        "supersample": reader.integer(doc, "supersample", Config.SUPERSAMPLE, f"{path}.supersample", minimum=1),
        "nir_misalignment": _parse_misalignment(doc.get("nir_misalignment"), width, height, reader,
                                                f"{path}.nir_misalignment"),
    }
    try:
        return AcquisitionModel(**fields)
    except DualBandError as e:
        reader.error(path, str(e))
        return None


def _parse_analysis(doc: Dict[str, Any], reader: _DocumentReader) -> AnalysisParams:
    path = "$.analysis"
    params = AnalysisParams(
        canny_sigma=reader.number(doc, "canny_sigma", Config.CANNY_SIGMA, f"{path}.canny_sigma",
                                  ConfigValidator.validate_nonnegative),
        canny_low=reader.number(doc, "canny_low", Config.CANNY_LOW, f"{path}.canny_low"),
        canny_high=reader.number(doc, "canny_high", Config.CANNY_HIGH, f"{path}.canny_high"),
        edge_margin=reader.integer(doc, "edge_margin", Config.EDGE_MARGIN, f"{path}.edge_margin", minimum=0),
        brightness_margin=reader.number(doc, "brightness_margin", Config.BRIGHTNESS_MARGIN,
                                        f"{path}.brightness_margin", ConfigValidator.validate_nonnegative),
    )
    reader.check(f"{path}.canny_low", ConfigValidator.validate_thresholds(params.canny_low, params.canny_high))
    return params


def _parse_registration(doc: Dict[str, Any], reader: _DocumentReader) -> RegistrationParams:
    path = "$.registration"
    board = doc.get("board", list(Config.BOARD))
    if not reader.check(f"{path}.board", ConfigValidator.validate_board(board)):
        board = Config.BOARD
    return RegistrationParams(enabled=reader.boolean(doc, "enabled", True, f"{path}.enabled"), board=tuple(board))


def _parse_fusion(doc: Dict[str, Any], labels: List[str], base_dir: Path, reader: _DocumentReader) -> FusionParams:
    path = "$.fusion"
    mode = doc.get("mode", "plant_mask")
    reader.check(f"{path}.mode", ConfigValidator.validate_choice(mode, FUSION_MODES))
    params = FusionParams(
        enabled=reader.boolean(doc, "enabled", True, f"{path}.enabled"),
        mode=mode,
        delta=reader.number(doc, "delta", Config.PLANT_DELTA, f"{path}.delta", ConfigValidator.validate_positive),
        alpha=reader.number(doc, "alpha", Config.PLANT_ALPHA, f"{path}.alpha", ConfigValidator.validate_unit_interval),
    )

    weights_doc = reader.section(doc, "region_weights", f"{path}.region_weights")
    for label in weights_doc:
        label_path = f"{path}.region_weights.{label}"
        value = reader.number(weights_doc, label, None, label_path, ConfigValidator.validate_weight)
        if label not in labels:
            reader.error(label_path, f"scene has no region labelled '{label}'")
        elif value is not None:
            params.region_weights[label] = value
    if params.enabled and mode == "regions" and not weights_doc:
        reader.error(f"{path}.region_weights", "mode 'regions' needs at least one region weight")

    weight_map = doc.get("weight_map_path")
    if weight_map is not None:
        resolved = Path(weight_map) if Path(weight_map).is_absolute() else base_dir / weight_map
        params.weight_map_path = str(resolved)
    if params.enabled and mode == "weight_map":
        if weight_map is None:
            reader.error(f"{path}.weight_map_path", "mode 'weight_map' needs weight_map_path")
        elif not Path(params.weight_map_path).is_file():
            reader.error(f"{path}.weight_map_path", f"file not found: {params.weight_map_path}")
    return params


def load_config_dict(doc: Any, base_dir: Union[str, Path] = ".") -> PipelineConfig:
    """Validate an already-parsed configuration document; relative paths resolve against `base_dir`."""
    reader = _DocumentReader()
    base_dir = Path(base_dir)
    if not isinstance(doc, dict):
        raise ConfigValidationError([("$", "configuration must be a JSON object")])
    for key in sorted(set(doc) - TOP_LEVEL_KEYS):
        reader.error(f"$.{key}", "unknown key")

    scene_doc: Dict[str, Any] = {}
    if "scene" in doc and "scene_path" in doc:
        reader.error("$.scene_path", "give either scene or scene_path, not both")
    elif "scene_path" in doc:
        scene_file = base_dir / doc["scene_path"]
        try:
            scene_doc = json.loads(scene_file.read_text())
        except (OSError, json.JSONDecodeError) as e:
            reader.error("$.scene_path", f"cannot read scene file {scene_file}: {e}")
    else:
        scene_doc = reader.section(doc, "scene", "$.scene", required=True)

    water = parse_water(reader.section(doc, "water", "$.water"), reader) or water_presets()["natural"]
    acq_doc = reader.section(doc, "acquisition", "$.acquisition")
    light = _parse_light(acq_doc, reader, "$.acquisition")
    width, height = (
        v if isinstance(v, int) and not isinstance(v, bool) else Config.IMAGE_SIZE
        for v in (scene_doc.get("width"), scene_doc.get("height"))
    )
    acquisition = _parse_acquisition(acq_doc, width, height, reader)
    analysis = _parse_analysis(reader.section(doc, "analysis", "$.analysis"), reader)
    registration = _parse_registration(reader.section(doc, "registration", "$.registration"), reader)
    scene = parse_scene(scene_doc, water, light, reader) if scene_doc else None
    labels = [obj.get("label") for obj in scene_doc.get("objects", []) if isinstance(obj, dict)]
    fusion = _parse_fusion(reader.section(doc, "fusion", "$.fusion"), labels, base_dir, reader)

    name = doc.get("name", scene_doc.get("name", "scene"))
    if not isinstance(name, str) or not name:
        reader.error("$.name", "expected a non-empty string")
        name = "scene"
    output_dir = doc.get("output_dir", f"{Config.DEFAULT_OUT_DIR}/{name}")
    if not isinstance(output_dir, str):
        reader.error("$.output_dir", "expected a path string")

    if reader.errors or scene is None or acquisition is None:
        if not reader.errors:
            reader.error("$", "configuration could not be built")
        raise ConfigValidationError(reader.errors)

    if scene.name == "scene":
        scene = dataclasses.replace(scene, name=name)
    return PipelineConfig(
        name=name,
        scene=scene,
        acquisition=acquisition,
        analysis=analysis,
        registration=registration,
        fusion=fusion,
        output_dir=Config.out_dir_override() or output_dir,
    )


def load_config(path: Union[str, Path]) -> PipelineConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise ConfigValidationError([("$", f"cannot read {path}: {e}")]) from e
    except json.JSONDecodeError as e:
        raise ConfigValidationError([("$", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")]) from e
    config = load_config_dict(doc, base_dir=path.parent)
    logger.info(f"loaded configuration '{config.name}' from {path}")
    return config


def with_overrides(config: PipelineConfig, seed: Optional[int] = None, out_dir: Optional[str] = None) -> PipelineConfig:
    """Apply command-line overrides on top of a loaded configuration."""
    if seed is not None:
        config = dataclasses.replace(config, acquisition=dataclasses.replace(config.acquisition, seed=seed))
    if out_dir is not None:
        config = dataclasses.replace(config, output_dir=out_dir)
    return config
