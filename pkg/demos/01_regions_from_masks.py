"""
Localizing objects from a segmentation label mask
=================================================

A label mask assigns a segment id (> 0) per pixel; 0 is background.
The regions module splits it into per-label connected components, drops
tiny ones as noise, and crops tight bounding boxes out of the image.
"""

import numpy as np

from ovor.regions import connected_components, extract_regions, resize_mask

# A 6x6 toy mask with two labels. The two 1-blobs touch only diagonally.
mask = np.array(
    [
        [1, 1, 0, 0, 2, 2],
        [1, 1, 0, 0, 2, 2],
        [0, 0, 1, 0, 2, 2],
        [0, 0, 1, 1, 0, 0],
        [0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0],
    ]
)

# 8-connectivity merges the diagonal touch; 4-connectivity keeps it split.
for conn in (4, 8):
    comps = connected_components(mask, connectivity=conn)
    print(f"connectivity={conn}: {[(c.label, c.area) for c in comps]}")

# Masks are often coarser than the image; nearest-neighbor resize keeps
# the label set intact (no interpolated in-between labels).
big = resize_mask(mask, 12, 12)
print("resized labels:", sorted(np.unique(big).tolist()))

# Full localization against an RGB image: components -> min-area filter
# -> bounding boxes -> crops. Region ids are dense and deterministic.
rng = np.random.default_rng(0)
image = rng.integers(0, 255, size=(12, 12, 3), dtype=np.uint8)
for region in extract_regions(mask, image, min_area=4):
    b = region.bbox
    print(
        f"region {region.region_id}: label={region.component.label} "
        f"bbox=({b.min_row},{b.min_col})-({b.max_row},{b.max_col}) "
        f"patch={region.patch.shape}"
    )
