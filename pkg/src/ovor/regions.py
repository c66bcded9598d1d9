"""Object localization from segmentation label masks.

A label mask assigns a segment id (> 0) to each pixel, 0 = background.
The pipeline here is: resize the mask to the image, split it into
connected components per label, drop small components as noise, compute
tight bounding boxes, and crop patches from the original image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ovor.errors import InvalidArgumentError

_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCTURE_8 = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Component:
    """A connected set of same-label pixels."""

    pixels: frozenset  # of (row, col)
    label: int

    @property
    def area(self) -> int:
        return len(self.pixels)


@dataclass(frozen=True)
class BBox:
    """Inclusive axis-aligned pixel box."""

    min_row: int
    min_col: int
    max_row: int
    max_col: int

    @property
    def height(self) -> int:
        return self.max_row - self.min_row + 1

    @property
    def width(self) -> int:
        return self.max_col - self.min_col + 1

    def to_list(self):
        return [self.min_row, self.min_col, self.max_row, self.max_col]


@dataclass(frozen=True)
class Region:
    """A localized object: component + bbox + cropped image patch."""

    region_id: int
    bbox: BBox
    component: Component
    patch: np.ndarray  # H x W x 3 uint8


def _as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidArgumentError(f"mask must be a non-empty 2D array, got shape {arr.shape}")
    if np.any(arr < 0):
        raise InvalidArgumentError("mask labels must be >= 0")
    return arr.astype(np.int64, copy=False)


def resize_mask(mask, target_h: int, target_w: int) -> np.ndarray:
    """Nearest-neighbor resize of a label mask; never interpolates labels."""
    arr = _as_mask(mask)
    if target_h <= 0 or target_w <= 0:
        raise InvalidArgumentError("resize target must be positive")
    h, w = arr.shape
    rows = (np.arange(target_h) * h) // target_h
    cols = (np.arange(target_w) * w) // target_w
    return arr[np.ix_(rows, cols)]


def connected_components(mask, connectivity: int = 8) -> list[Component]:
    """Split a mask into per-label connected components.

    Background (0) produces no components. Pixels with different labels
    never merge, even when adjacent. Returned ordered by
    (label, min_row, min_col).
    """
    arr = _as_mask(mask)
    if connectivity == 4:
        structure = _STRUCTURE_4
    elif connectivity == 8:
        structure = _STRUCTURE_8
    else:
        raise InvalidArgumentError(f"connectivity must be 4 or 8, got {connectivity}")

    out = []
    for label in np.unique(arr):
        if label == 0:
            continue
        labeled, n = ndimage.label(arr == label, structure=structure)
        if n == 0:
            continue
        rows, cols = np.nonzero(labeled)
        ids = labeled[rows, cols]
        order = np.argsort(ids, kind="stable")
        pts = list(zip(rows[order].tolist(), cols[order].tolist()))
        bounds = np.searchsorted(ids[order], np.arange(1, n + 2)).tolist()
        lbl = int(label)
        for comp_id in range(n):
            pixels = frozenset(pts[bounds[comp_id] : bounds[comp_id + 1]])
            out.append(Component(pixels=pixels, label=lbl))
    out.sort(key=lambda c: (c.label, min(c.pixels)))
    return out


def filter_small(components, min_area: int) -> list[Component]:
    """Keep components with area >= min_area, order preserved."""
    if min_area < 0:
        raise InvalidArgumentError("min_area must be >= 0")
    return [c for c in components if c.area >= min_area]


def bounding_box(component: Component) -> BBox:
    """Tight axis-aligned hull of a component's pixels."""
    if component.area < 1:
        raise InvalidArgumentError("cannot bound an empty component")
    rows = [p[0] for p in component.pixels]
    cols = [p[1] for p in component.pixels]
    return BBox(min(rows), min(cols), max(rows), max(cols))


def crop(image, bbox: BBox) -> np.ndarray:
    """Crop the inclusive bbox out of an RGB raster."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidArgumentError(f"expected an H x W x 3 image, got shape {img.shape}")
    h, w = img.shape[:2]
    if not (0 <= bbox.min_row <= bbox.max_row < h and 0 <= bbox.min_col <= bbox.max_col < w):
        raise InvalidArgumentError(f"bbox {bbox} outside image bounds {h}x{w}")
    return img[bbox.min_row : bbox.max_row + 1, bbox.min_col : bbox.max_col + 1].copy()


def extract_regions(
    mask, image, min_area: int = 100, connectivity: int = 8
) -> list[Region]:
    """Full localization: mask -> filtered components -> bboxes -> crops.

    The mask is resized to the image if shapes differ. Region ids are
    dense 0..N-1 in (label, min_row, min_col) order, so downstream
    embeddings and reports are reproducible.
    """
    img = np.asarray(image)
    arr = _as_mask(mask)
    if arr.shape != img.shape[:2]:
        arr = resize_mask(arr, img.shape[0], img.shape[1])
    comps = filter_small(connected_components(arr, connectivity), min_area)
    regions = []
    for i, comp in enumerate(comps):
        box = bounding_box(comp)
        regions.append(Region(region_id=i, bbox=box, component=comp, patch=crop(img, box)))
    return regions
