import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

class Config:
    VERSION = "1.0.0"
    APP_TITLE = "Dual-band underwater imaging toolkit"

    # Output directory is the only setting taken from the environment
    OUT_DIR_ENV = "DUALBAND_OUT_DIR"
    DEFAULT_OUT_DIR = "out"

    # Bundled fixtures
    DATA_DIR = "data"
    TANK_SCENE_PATH = "data/tank_scene.json"
    FABRIC_SCENE_PATH = "data/tank_scene_fabric.json"

    # Acquisition defaults
    IMAGE_SIZE = 256
    DEFAULT_SEED = 7
    DEFAULT_GAIN = 400.0
    DEFAULT_NOISE_SIGMA = 1.0
    GLASS_TRANSMITTANCE = 0.92  # applied once per crossing pair
    SUPERSAMPLE = 2
    DEFAULT_LIGHT_POWER = 1.0  # relative P_VIS / P_NIR, levelled

    # Analysis defaults (shared by both channels)
    CANNY_SIGMA = 1.4
    CANNY_LOW = 10.0
    CANNY_HIGH = 30.0
    EDGE_MARGIN = 5
    BRIGHTNESS_MARGIN = 5.0

    # Enhancement defaults
    CLAHE_TILE = 32
    CLAHE_CLIP = 0.02
    STRETCH_LOW = 1.0
    STRETCH_HIGH = 99.0
    HOMOMORPHIC_CUTOFF = 8.0
    HOMOMORPHIC_GAMMA_LOW = 0.5
    HOMOMORPHIC_GAMMA_HIGH = 1.5

    # Registration and fusion defaults
    BOARD = (4, 4)
    PLANT_DELTA = 12.0
    PLANT_ALPHA = 1.0

    # Claim thresholds
    REGISTRATION_RMS_LIMIT = 0.5
    FABRIC_EDGE_RATIO = 10.0
    BLACK_FABRIC_MARGIN = 20.0
    PLANT_IOU_MIN = 0.8

    # Exit codes
    EXIT_OK = 0
    EXIT_ERROR = 1
    EXIT_CLAIM_FAILED = 2

    CLAIMS = {
        "nir_darker": "NIR images have less brightness than VIS images",
        "vis_lower_contrast": "scattering lowers VIS contrast on the reference marker",
        "plant_edges_nir": "more plant edges are detected in NIR",
        "fabric_dye_invisible_nir": "dyed fabric circles are invisible in NIR",
        "black_fabric_nir": "black fabric is detectable in NIR",
        "registration_accuracy": "marker registration restores pixel correspondence",
        "plant_removal": "NIR-weighted fusion removes plant-filled areas from VIS",
    }

    @staticmethod
    def out_dir_override():
        """Output directory forced through the environment, or None."""
        return os.getenv(Config.OUT_DIR_ENV) or None
