"""Shared fixtures: a vocabulary file and a localize-style crops directory."""

import json

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def vocab_path(tmp_path):
    path = tmp_path / "vocab.json"
    path.write_text(json.dumps(
        [
            {"name": "cat", "supercategory": "animal"},
            {"name": "pizza", "supercategory": "food"},
        ]
    ))
    return path


@pytest.fixture
def crops_dir(tmp_path):
    """Crops named '<image_id>_<region_id>.png'; 2:0 duplicates 1:0's pixels."""
    rng = np.random.default_rng(0)
    d = tmp_path / "crops"
    d.mkdir()
    first = rng.integers(0, 255, size=(12, 10, 3), dtype=np.uint8)
    Image.fromarray(first).save(d / "1_0.png")
    Image.fromarray(rng.integers(0, 255, size=(9, 9, 3), dtype=np.uint8)).save(d / "1_1.png")
    Image.fromarray(first).save(d / "2_0.png")
    return d
