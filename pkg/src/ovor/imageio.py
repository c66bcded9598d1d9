"""Image and mask file I/O plus overlay rendering."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ovor import ovt
from ovor.errors import InvalidArgumentError


def load_image(path) -> np.ndarray:
    """8-bit RGB image as an H x W x 3 uint8 array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_image(array, path) -> None:
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path)


def load_mask(path) -> np.ndarray:
    """Segment-id mask from a 16-bit single-channel PNG or an OVT file."""
    path = Path(path)
    if path.suffix == ".ovt":
        arr = ovt.read_ovt(path)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"{path}: mask tensor must be 2D, got {arr.shape}")
        return arr.astype(np.int64)
    with Image.open(path) as im:
        if im.mode not in ("I", "I;16", "L", "P"):
            im = im.convert("I")
        return np.asarray(im, dtype=np.int64)


def save_mask(mask, path) -> None:
    """Write a label mask as a 16-bit single-channel PNG."""
    arr = np.asarray(mask)
    if arr.min() < 0 or arr.max() > 0xFFFF:
        raise InvalidArgumentError("mask labels must fit in uint16")
    Image.fromarray(arr.astype(np.uint16)).save(path)


def render_overlay(image, predictions, bboxes, names, path) -> None:
    """Draw kept predictions (bbox + 'label p=prob') onto the image."""
    im = Image.fromarray(np.asarray(image, dtype=np.uint8)).convert("RGB")
    draw = ImageDraw.Draw(im)
    for pred, bbox in zip(predictions, bboxes):
        if pred.discarded:
            continue
        draw.rectangle(
            [bbox.min_col, bbox.min_row, bbox.max_col, bbox.max_row],
            outline=(255, 40, 40), width=2,
        )
        label = f"{names[pred.category_index]} p={pred.probability:.3f}"
        draw.text((bbox.min_col + 2, max(0, bbox.min_row - 12)), label, fill=(255, 40, 40))
    im.save(path)
