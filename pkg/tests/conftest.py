"""Shared fixtures: synthetic datasets for pipeline and training tests."""

import json
from pathlib import Path

import numpy as np
import pytest

from ovor import imageio, regions
from ovor.config import RunConfig
from ovor.encoders import MockEncoder, region_key
from ovor.prompts import build_category_table, make_vocabulary


def make_planted_dataset(root: Path, n_images=3, seed=0, min_area=20):
    """Synthetic images + masks + COCO GT + planted region assignments.

    Each image holds a few rectangular single-label blobs; every blob's
    true category is its mask label minus one. Returns a ready RunConfig
    for the planted-mock encoder.
    """
    rng = np.random.default_rng(seed)
    images_dir = root / "images"
    masks_dir = root / "masks"
    images_dir.mkdir(parents=True)
    masks_dir.mkdir(parents=True)

    names = ["cat", "dog", "bird"]
    vocab_path = root / "vocab.json"
    vocab_path.write_text(json.dumps(
        [{"name": n, "supercategory": "animal"} for n in names]
    ))

    coco = {
        "images": [],
        "annotations": [],
        "categories": [
            {"id": 10 + i, "name": n, "supercategory": "animal"}
            for i, n in enumerate(names)
        ],
    }
    assignment = {}
    ann_id = 1
    for image_id in range(1, n_images + 1):
        h = w = 48
        image = rng.integers(0, 255, size=(h, w, 3), dtype=np.uint8)
        mask = np.zeros((h, w), dtype=np.int64)
        # non-overlapping blobs on a 2x2 grid of cells
        cells = [(2, 2), (2, 26), (26, 2), (26, 26)]
        n_blobs = int(rng.integers(2, 4))
        for b in range(n_blobs):
            r0, c0 = cells[b]
            bh, bw = int(rng.integers(8, 16)), int(rng.integers(8, 16))
            label = int(rng.integers(1, len(names) + 1))
            mask[r0 : r0 + bh, c0 : c0 + bw] = label
        imageio.save_image(image, images_dir / f"{image_id}.png")
        imageio.save_mask(mask, masks_dir / f"{image_id}.png")
        coco["images"].append(
            {"id": image_id, "file_name": f"{image_id}.png", "height": h, "width": w}
        )
        for reg in regions.extract_regions(mask, image, min_area=min_area):
            cat_index = reg.component.label - 1
            assignment[region_key(image_id, reg.region_id)] = cat_index
            b = reg.bbox
            coco["annotations"].append(
                {
                    "id": ann_id,
                    "image_id": image_id,
                    "category_id": 10 + cat_index,
                    "bbox": [b.min_col, b.min_row, b.width, b.height],
                }
            )
            ann_id += 1

    ann_path = root / "instances.json"
    ann_path.write_text(json.dumps(coco))
    assignment_path = root / "assignment.json"
    assignment_path.write_text(json.dumps(assignment))

    return RunConfig(
        images_dir=str(images_dir),
        masks_dir=str(masks_dir),
        annotations=str(ann_path),
        vocabulary=str(vocab_path),
        encoder="planted-mock",
        planted_assignment=str(assignment_path),
        planted_noise=0.0,
        theta=0.0,
        min_area=min_area,
        seed=0,
        out_dir=str(root / "out"),
    )


def make_synthetic_training_task(
    n_classes=10, n_samples=500, feature_dim=20, embed_dim=8, noise=0.05, seed=0
):
    """Separable synthetic task for the alignment MLP.

    Class text embeddings are random unit vectors; features are class
    prototypes plus Gaussian noise. Returns (dataset, table).
    """
    rng = np.random.default_rng(seed)
    text = rng.standard_normal((n_classes, embed_dim))
    text /= np.linalg.norm(text, axis=1, keepdims=True)
    vocab = make_vocabulary([(f"class{i}", "object") for i in range(n_classes)])[:n_classes]

    from ovor.prompts import CategoryTable

    table = CategoryTable(categories=vocab, embeddings=text)
    prototypes = rng.standard_normal((n_classes, feature_dim))
    dataset = []
    for i in range(n_samples):
        c = i % n_classes
        dataset.append((prototypes[c] + noise * rng.standard_normal(feature_dim), c))
    return dataset, table


@pytest.fixture
def planted_config(tmp_path):
    return make_planted_dataset(tmp_path)


@pytest.fixture
def mock_text_encoder():
    return MockEncoder(seed=0)


@pytest.fixture
def small_table(mock_text_encoder):
    vocab = make_vocabulary([("cat", "animal"), ("pizza", "food"), ("car", "vehicle")])
    return build_category_table(vocab, mock_text_encoder)
