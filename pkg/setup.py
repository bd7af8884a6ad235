#!/usr/bin/env python3
"""
Quick setup script for the dual-band imaging toolkit: output directories, .env template and fixtures.
"""

import os
import sys

if __name__ == "__main__" and len(sys.argv) > 1:
    # Invoked by a build frontend (pip/setuptools): metadata lives in pyproject.toml.
    from setuptools import setup

    setup()
    sys.exit(0)

from config import Config


def create_directory_structure():
    """Create the directories the pipeline writes into."""
    for directory in [Config.DATA_DIR, Config.DEFAULT_OUT_DIR]:
        os.makedirs(directory, exist_ok=True)
    print("Directory structure created")


def create_env_template():
    """Create .env template file"""
    env_content = f"""# Dual-band imaging toolkit
# Uncomment to send every run to a fixed directory (overrides output_dir in configs)
# {Config.OUT_DIR_ENV}=out
"""

    if not os.path.exists(".env"):
        with open(".env", "w") as f:
            f.write(env_content)
        print(".env template created")
    else:
        print(".env file already exists")


def main():
    print("Setting up the toolkit")
    print("=" * 50)

    create_directory_structure()
    create_env_template()

    from create_tank_scene import main as create_scenes
    create_scenes()

    print("\n" + "=" * 50)
    print("Setup completed")
    print("\nNext steps:")
    print("1. Install dependencies: pip install -r requirements.txt")
    print(f"2. Run the tank experiment: python app.py pipeline --config {Config.TANK_SCENE_PATH}")
    print(f"3. Fabric variant: python app.py pipeline --config {Config.FABRIC_SCENE_PATH}")
    print("4. Tests: pytest")


if __name__ == "__main__":
    main()
