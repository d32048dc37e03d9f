import importlib
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
PKG_ROOT = TESTS_DIR.parent

for path in (str(TESTS_DIR), str(PKG_ROOT / "src")):
    if path not in sys.path:
        sys.path.insert(0, path)

import fake_bpy  # noqa: E402


@pytest.fixture()
def bpy_env():
    """Fresh fake bpy/mathutils installed for one test, api reloaded on it."""
    bpy = fake_bpy.build_fake_bpy()
    sys.modules["bpy"] = bpy
    sys.modules["mathutils"] = fake_bpy.build_fake_mathutils()
    import car_blender_runtime.api as api

    api = importlib.reload(api)
    import car_blender_runtime.driver as driver

    driver = importlib.reload(driver)
    yield bpy, api, driver
