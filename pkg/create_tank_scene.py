import json
import os

from config import Config

# Both tank image pairs share the cube with the reference chessboard and the rusty face.
MARKER = {"label": "marker", "material": "chessboard_marker", "rect": [40, 60, 100, 100], "distance": 0.35, "z_order": 3}
RUST = {"label": "rust", "material": "rust_metal", "rect": [40, 30, 140, 30], "distance": 0.40, "z_order": 1}
GRAVEL = {"label": "gravel", "material": "gravel", "rect": [0, 216, 256, 40], "distance": 0.5, "z_order": 0}


def _acquisition():
    return {
        "gain": Config.DEFAULT_GAIN,
        "interface_transmittance": Config.GLASS_TRANSMITTANCE,
        "light_power": Config.DEFAULT_LIGHT_POWER,
        "noise_sigma": Config.DEFAULT_NOISE_SIGMA,
        # the filter wheel needs about 150 ms per switch, so the second frame drifts
        "nir_misalignment": {"rotation_deg": 0.5, "tx": 2.0, "ty": -1.5},
        "seed": Config.DEFAULT_SEED,
        "supersample": Config.SUPERSAMPLE,
    }


def _analysis():
    return {
        "brightness_margin": Config.BRIGHTNESS_MARGIN,
        "canny_high": Config.CANNY_HIGH,
        "canny_low": Config.CANNY_LOW,
        "canny_sigma": Config.CANNY_SIGMA,
        "edge_margin": Config.EDGE_MARGIN,
    }


def _scene(name, objects):
    return {
        "background": {"distance": 0.8, "material": "black_background"},
        "bands": ["vis", "nir"],
        "height": Config.IMAGE_SIZE,
        "name": name,
        "objects": objects,
        "width": Config.IMAGE_SIZE,
    }


def create_plant_scene():
    """Cube with marker, rust and tinplate faces next to a patch of underwater plants."""
    objects = [
        MARKER,
        RUST,
        {"label": "tinplate", "material": "tinplate", "rect": [140, 60, 40, 100], "distance": 0.40, "z_order": 2},
        {"label": "plant", "material": "plant", "rect": [186, 80, 63, 112], "distance": 0.40, "z_order": 4},
        GRAVEL,
    ]
    return {
        "acquisition": _acquisition(),
        "analysis": _analysis(),
        "fusion": {"alpha": Config.PLANT_ALPHA, "delta": Config.PLANT_DELTA, "enabled": True, "mode": "plant_mask"},
        "name": "tank_scene",
        "registration": {"board": list(Config.BOARD), "enabled": True},
        "scene": _scene("tank_scene", objects),
        "water": {"preset": "natural"},
    }


def create_fabric_scene():
    """Cube turned to its fabric face, with a black fabric fragment and a striped patch."""
    objects = [
        MARKER,
        RUST,
        {"label": "fabric_blobs", "material": "fabric_blobs", "rect": [140, 60, 40, 100], "distance": 0.40, "z_order": 2},
        {"label": "black_fabric", "material": "black_fabric", "rect": [190, 150, 50, 50], "distance": 0.35, "z_order": 4},
        {"label": "fabric_stripes", "material": "fabric_stripes", "rect": [190, 70, 50, 60], "distance": 0.45, "z_order": 5},
        GRAVEL,
    ]
    return {
        "acquisition": _acquisition(),
        "analysis": _analysis(),
        "fusion": {"enabled": True, "mode": "regions", "region_weights": {"black_fabric": 0.5}},
        "name": "tank_scene_fabric",
        "registration": {"board": list(Config.BOARD), "enabled": True},
        "scene": _scene("tank_scene_fabric", objects),
        "water": {"preset": "natural"},
    }


def _write(path, doc):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def main():
    """Write the two bundled pipeline configurations."""
    _write(Config.TANK_SCENE_PATH, create_plant_scene())
    print(f"Created {Config.TANK_SCENE_PATH}")
    _write(Config.FABRIC_SCENE_PATH, create_fabric_scene())
    print(f"Created {Config.FABRIC_SCENE_PATH}")


if __name__ == "__main__":
    main()
