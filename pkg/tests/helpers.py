import numpy as np

from imaging.raster import GrayImage
from optics.scene_model import Background, LightSource, Material, SceneObject, SceneSpec
from optics.water_optics import NIR_BAND, VIS_BAND, OpticalCoefficients, PhaseFunction, WaterBody


def lossless_water(veiling: float = 0.0) -> WaterBody:
    coefficients = {"vis": OpticalCoefficients(0.0, 0.0), "nir": OpticalCoefficients(0.0, 0.0)}
    return WaterBody(coefficients, PhaseFunction(0.0), {"vis": veiling, "nir": veiling}, enforce_orderings=False)


def make_scene(objects, water: WaterBody, width: int = 32, height: int = 32, power: float = 1.0,
               background_distance: float = 2.0) -> SceneSpec:
    return SceneSpec(
        width=width,
        height=height,
        objects=objects,
        background=Background(Material("black_background", 0.0, 0.0), background_distance),
        light=LightSource({"vis": power, "nir": power}),
        water=water,
        bands=[VIS_BAND, NIR_BAND],
        name="test_scene",
    )


def patch(rect, distance: float, z_order: int, rho: float = 0.4, label: str = "") -> SceneObject:
    return SceneObject(Material("flat", rho, rho), distance, rect, z_order, label)


def chessboard_image(cols: int, rows: int, cell: int = 16, origin: int = 24, size: int = 128,
                     dark: int = 50, light: int = 200, surround: int = 125):
    """Axis-aligned board with (cols + 1) x (rows + 1) squares and its true inner corners."""
    pixels = np.full((size, size), surround, dtype=np.uint8)
    for j in range(rows + 1):
        for i in range(cols + 1):
            value = light if (i + j) % 2 == 0 else dark
            pixels[origin + j * cell:origin + (j + 1) * cell, origin + i * cell:origin + (i + 1) * cell] = value
    corners = np.array(
        [[origin + (i + 1) * cell - 0.5, origin + (j + 1) * cell - 0.5] for j in range(rows) for i in range(cols)]
    )
    return GrayImage(pixels), corners
