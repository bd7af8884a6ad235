"""Declarative 2.5-D description of the submerged scene.

Objects are frontal rectangles at fixed distances from the camera plane; the
front-most object (highest z_order) owns a pixel. Textures are evaluated in the
object's unit square (u across, v down).
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from optics.water_optics import ChannelBand, WaterBody
from imaging.raster import Rect
from utils.errors import ArgumentError

PATTERNS = ("uniform", "chessboard", "stripes", "blobs")
BLOB_RADIUS = 0.3  # disk radius in lattice cells


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


@dataclass(frozen=True)
class Material:
    name: str
    rho_vis: float
    rho_nir: float
    pattern: str = "uniform"
    pattern_contrast_vis: float = 0.0
    pattern_contrast_nir: float = 0.0
    pattern_scale: float = 1.0

    def reflectance(self, band: Union[ChannelBand, str]) -> float:
        return self.rho_vis if _band_name(band) == "vis" else self.rho_nir

    def contrast(self, band: Union[ChannelBand, str]) -> float:
        return self.pattern_contrast_vis if _band_name(band) == "vis" else self.pattern_contrast_nir

    def violations(self) -> List[str]:
        problems = []
        numeric = ("rho_vis", "rho_nir", "pattern_contrast_vis", "pattern_contrast_nir", "pattern_scale")
        wrong_type = [attr for attr in numeric if not _is_number(getattr(self, attr))]
        for attr in wrong_type:
            problems.append(f"{attr} must be a finite number, got {getattr(self, attr)!r}")
        if wrong_type:
            return problems
        for attr in numeric[:4]:
            value = getattr(self, attr)
            if not 0.0 <= value <= 1.0:
                problems.append(f"{attr} {value} outside [0, 1]")
        if self.pattern not in PATTERNS:
            problems.append(f"unknown pattern '{self.pattern}'")
        if self.pattern == "uniform" and (self.pattern_contrast_vis or self.pattern_contrast_nir):
            problems.append("uniform pattern with nonzero contrast")
        if self.pattern_scale <= 0:
            problems.append("nonpositive pattern_scale")
        return problems


@dataclass(frozen=True)
class SceneObject:
    material: Material
    distance: float
    rect: Rect
    z_order: int
    label: str = ""


@dataclass(frozen=True)
class LightSource:
    """Relative optical power per band; `colocated` puts the lamp at the camera."""

    power: Dict[str, float]
    colocated: bool = True

    def power_for(self, band: Union[ChannelBand, str]) -> float:
        return self.power.get(_band_name(band), 0.0)


@dataclass(frozen=True)
class Background:
    material: Material
    distance: float


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    objects: List[SceneObject]
    background: Background
    light: LightSource
    water: WaterBody
    bands: List[ChannelBand]
    name: str = "scene"

    def band(self, name: str) -> ChannelBand:
        for band in self.bands:
            if band.name == name:
                return band
        raise ArgumentError(f"scene '{self.name}' does not declare band '{name}'")

    def regions(self) -> Dict[str, Rect]:
        return {obj.label: tuple(obj.rect) for obj in self.objects if obj.label}


@dataclass(frozen=True)
class SceneViolation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


def _band_name(band: Union[ChannelBand, str]) -> str:
    return band.name if isinstance(band, ChannelBand) else band


def builtin_materials() -> Dict[str, Material]:
    """Catalog of the materials found in the tank experiment."""
    catalog = [
        Material("chessboard_marker", 0.5, 0.5, "chessboard", 0.8, 0.8, 5.0),
        Material("rust_metal", 0.25, 0.35, "blobs", 0.15, 0.10, 6.0),
        Material("tinplate", 0.55, 0.50),
        Material("rubber", 0.08, 0.10),
        # fabrics look alike in NIR: the dyes do not modulate near-infrared reflectance
        Material("fabric_stripes", 0.45, 0.75, "stripes", 0.5, 0.0, 6.0),
        Material("fabric_blobs", 0.5, 0.75, "blobs", 0.6, 0.0, 2.0),
        Material("black_fabric", 0.03, 0.8),
        # leaf blades, dark in VIS and bright in NIR
        Material("plant", 0.075, 0.8, "stripes", 0.12, 0.30, 4.5),
        Material("gravel", 0.35, 0.35, "blobs", 0.4, 0.4, 3.0),
        Material("black_background", 0.01, 0.01),
    ]
    return {material.name: material for material in catalog}


def materials_table(materials: Optional[Dict[str, Material]] = None) -> pd.DataFrame:
    materials = materials if materials is not None else builtin_materials()
    rows = [
        {
            "name": m.name,
            "rho_vis": m.rho_vis,
            "rho_nir": m.rho_nir,
            "pattern": m.pattern,
            "pattern_contrast_vis": m.pattern_contrast_vis,
            "pattern_contrast_nir": m.pattern_contrast_nir,
            "pattern_scale": m.pattern_scale,
        }
        for m in materials.values()
    ]
    return pd.DataFrame(rows)


def _pattern_sign(pattern: str, scale: float, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    su = u * scale
    sv = v * scale
    if pattern == "uniform":
        return np.zeros_like(su)
    if pattern == "chessboard":
        parity = (np.floor(su) + np.floor(sv)) % 2
        return np.where(parity == 0, 1.0, -1.0)
    if pattern == "stripes":
        return np.where(su - np.floor(su) < 0.5, 1.0, -1.0)
    if pattern == "blobs":
        # disks on a hex lattice: odd rows shifted by half a cell
        row = np.floor(sv)
        offset = 0.5 * (row % 2)
        col = np.floor(su - offset)
        du = su - (col + 0.5 + offset)
        dv = sv - (row + 0.5)
        return np.where(du * du + dv * dv <= BLOB_RADIUS * BLOB_RADIUS, 1.0, -1.0)
    raise ArgumentError(f"unknown pattern '{pattern}'")


def texture_value(
    material: Material,
    band: Union[ChannelBand, str],
    u: Union[float, np.ndarray],
    v: Union[float, np.ndarray],
) -> Union[float, np.ndarray]:
    """Reflectance of `material` in `band` at unit-square coordinates (u, v)."""
    u_arr = np.asarray(u, dtype=np.float64)
    v_arr = np.asarray(v, dtype=np.float64)
    if np.any(u_arr < 0) or np.any(u_arr > 1) or np.any(v_arr < 0) or np.any(v_arr > 1):
        raise ArgumentError("texture coordinates must lie in [0, 1]")
    sign = _pattern_sign(material.pattern, material.pattern_scale, u_arr, v_arr)
    value = np.clip(material.reflectance(band) + 0.5 * material.contrast(band) * sign, 0.0, 1.0)
    if value.ndim == 0:
        return float(value)
    return value


def validate_scene(spec: SceneSpec) -> List[SceneViolation]:
    """Every invariant breach in the scene; an empty list means the scene is usable."""
    violations: List[SceneViolation] = []

    def add(path: str, message: str):
        violations.append(SceneViolation(path, message))

    if spec.width <= 0 or spec.height <= 0:
        add("scene", f"nonpositive image size {spec.width}x{spec.height}")
    if not spec.objects:
        add("scene.objects", "scene needs at least one object")
    if not spec.bands:
        add("scene.bands", "scene declares no bands")

    for problem in spec.background.material.violations():
        add("scene.background.material", problem)
    if spec.background.distance <= 0:
        add("scene.background", "nonpositive distance")

    seen_z: Dict[int, int] = {}
    seen_labels: Dict[str, int] = {}
    max_distance = 0.0
    for index, obj in enumerate(spec.objects):
        path = f"scene.objects[{index}]"
        for problem in obj.material.violations():
            add(f"{path}.material", problem)
        if obj.distance <= 0:
            add(path, "nonpositive distance")
        max_distance = max(max_distance, obj.distance)
        x, y, w, h = obj.rect
        if w <= 0 or h <= 0:
            add(path, f"empty rect {tuple(obj.rect)}")
        elif x < 0 or y < 0 or x + w > spec.width or y + h > spec.height:
            add(path, f"rect {tuple(obj.rect)} outside image bounds")
        if obj.z_order in seen_z:
            add(path, f"duplicate z_order {obj.z_order} (also objects[{seen_z[obj.z_order]}])")
        else:
            seen_z[obj.z_order] = index
        if obj.label:
            if obj.label in seen_labels:
                add(path, f"duplicate label '{obj.label}'")
            else:
                seen_labels[obj.label] = index

    if spec.objects and spec.background.distance < max_distance:
        add("scene.background", "background closer than an object")

    for band in spec.bands:
        if band.name not in spec.water.coefficients:
            add("water.coefficients", f"missing coefficients for band '{band.name}'")
        if spec.light.power_for(band) <= 0:
            add("scene.light.power", f"nonpositive light power for band '{band.name}'")

    return violations


def coverage_map(spec: SceneSpec) -> np.ndarray:
    """Index of the object owning each pixel (-1 for background), painter's order by z_order."""
    coverage = np.full((spec.height, spec.width), -1, dtype=np.int32)
    order = sorted(range(len(spec.objects)), key=lambda i: spec.objects[i].z_order)
    for index in order:
        x, y, w, h = spec.objects[index].rect
        coverage[y:y + h, x:x + w] = index
    return coverage


def label_masks(spec: SceneSpec) -> Dict[str, np.ndarray]:
    """Visible-pixel mask per labelled object."""
    coverage = coverage_map(spec)
    return {obj.label: coverage == index for index, obj in enumerate(spec.objects) if obj.label}


def region_table(spec: SceneSpec) -> Dict[str, Dict[str, object]]:
    coverage = coverage_map(spec)
    regions = {}
    for index, obj in enumerate(spec.objects):
        if not obj.label:
            continue
        regions[obj.label] = {
            "rect": [int(v) for v in obj.rect],
            "material": obj.material.name,
            "distance_m": float(obj.distance),
            "visible_pixels": int(np.count_nonzero(coverage == index)),
        }
    return regions
