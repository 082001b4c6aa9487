import json
import os

import pytest

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
SCENES_DIR = os.path.join(DATA_DIR, "scenes")
ORACLES_DIR = os.path.join(DATA_DIR, "oracles")


@pytest.fixture(scope="session")
def scenes_dir():
    return SCENES_DIR


@pytest.fixture(scope="session")
def scene_dump_dirs():
    dirs = sorted(
        os.path.join(SCENES_DIR, name, "dump")
        for name in os.listdir(SCENES_DIR)
        if name.startswith("scene_")
    )
    assert dirs, "checked-in scene fixtures missing"
    return dirs


@pytest.fixture(scope="session")
def gt_all():
    with open(os.path.join(SCENES_DIR, "gt_all.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_oracle(name):
    with open(os.path.join(ORACLES_DIR, name), "r", encoding="utf-8") as fh:
        return json.load(fh)
