from pathlib import Path

import pytest

from config import Config
from optics.renderer import acquire_pair
from stages.pipeline import run_pipeline
from utils.config_loader import load_config

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(autouse=True)
def no_out_dir_override(monkeypatch):
    monkeypatch.delenv(Config.OUT_DIR_ENV, raising=False)


@pytest.fixture(scope="session")
def tank_config_path():
    return REPO_ROOT / Config.TANK_SCENE_PATH


@pytest.fixture(scope="session")
def fabric_config_path():
    return REPO_ROOT / Config.FABRIC_SCENE_PATH


@pytest.fixture(scope="session")
def tank_config(tank_config_path):
    return load_config(tank_config_path)


@pytest.fixture(scope="session")
def fabric_config(fabric_config_path):
    return load_config(fabric_config_path)


@pytest.fixture(scope="session")
def tank_pair(tank_config):
    return acquire_pair(tank_config.scene, tank_config.water, tank_config.acquisition)


@pytest.fixture(scope="session")
def tank_run(tank_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("tank_run")
    return run_pipeline(tank_config, out), out


@pytest.fixture(scope="session")
def fabric_run(fabric_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("fabric_run")
    return run_pipeline(fabric_config, out), out
