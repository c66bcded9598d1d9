import numpy as np
import pytest

from ovor.errors import InvalidArgumentError
from ovor.regions import (
    BBox,
    Component,
    bounding_box,
    connected_components,
    crop,
    extract_regions,
    filter_small,
    resize_mask,
)


def flood_fill_components(mask, connectivity):
    """Independent oracle: naive flood fill, one component per seed."""
    grid = np.asarray(mask).tolist()  # plain ints index much faster
    h, w = len(grid), len(grid[0])
    if connectivity == 4:
        neigh = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    else:
        neigh = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    seen = [[False] * w for _ in range(h)]
    comps = []
    for r in range(h):
        for c in range(w):
            if grid[r][c] == 0 or seen[r][c]:
                continue
            label = grid[r][c]
            stack = [(r, c)]
            seen[r][c] = True
            pixels = set()
            while stack:
                pr, pc = stack.pop()
                pixels.add((pr, pc))
                for dr, dc in neigh:
                    nr, nc = pr + dr, pc + dc
                    if 0 <= nr < h and 0 <= nc < w and not seen[nr][nc] and grid[nr][nc] == label:
                        seen[nr][nc] = True
                        stack.append((nr, nc))
            comps.append((label, frozenset(pixels)))
    return comps


def random_mask(rng, h=64, w=64, n_labels=4):
    return rng.integers(0, n_labels + 1, size=(h, w))


class TestResizeMask:
    def test_integer_upscale_replicates_blocks(self):
        out = resize_mask(np.array([[1, 2], [3, 4]]), 4, 4)
        expected = np.array(
            [[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]]
        )
        assert np.array_equal(out, expected)

    def test_identity_resize(self):
        mask = np.arange(12).reshape(3, 4)
        assert np.array_equal(resize_mask(mask, 3, 4), mask)

    def test_constant_fill_from_single_pixel(self):
        assert np.array_equal(resize_mask(np.array([[5]]), 3, 3), np.full((3, 3), 5))

    def test_zero_sized_target_rejected(self):
        with pytest.raises(InvalidArgumentError):
            resize_mask(np.array([[1]]), 0, 3)

    def test_no_new_labels(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            mask = random_mask(rng, 13, 17)
            out = resize_mask(mask, int(rng.integers(1, 40)), int(rng.integers(1, 40)))
            assert set(np.unique(out)) <= set(np.unique(mask))


class TestConnectedComponents:
    def test_diagonal_pixels_split_under_4_connectivity(self):
        mask = np.zeros((3, 3), dtype=int)
        mask[0, 0] = mask[2, 2] = 1
        comps = connected_components(mask, connectivity=4)
        assert len(comps) == 2
        assert all(c.area == 1 for c in comps)

    def test_diagonal_pixels_merge_under_8_connectivity(self):
        mask = np.zeros((2, 2), dtype=int)
        mask[0, 0] = mask[1, 1] = 1
        assert len(connected_components(mask, connectivity=8)) == 1

    def test_all_zero_mask_gives_no_components(self):
        assert connected_components(np.zeros((5, 5), dtype=int)) == []

    def test_adjacent_different_labels_never_merge(self):
        mask = np.array([[1, 2], [1, 2]])
        comps = connected_components(mask, connectivity=8)
        assert len(comps) == 2
        assert sorted(c.label for c in comps) == [1, 2]

    @pytest.mark.parametrize("connectivity", [4, 8])
    def test_matches_flood_fill_oracle(self, connectivity):
        rng = np.random.default_rng(42)
        for _ in range(30):
            mask = random_mask(rng)
            got = {(c.label, c.pixels) for c in connected_components(mask, connectivity)}
            expected = set(flood_fill_components(mask, connectivity))
            assert got == expected

    def test_partition_invariant(self):
        rng = np.random.default_rng(3)
        mask = random_mask(rng, 32, 32)
        comps = connected_components(mask, 8)
        union = set()
        total = 0
        for c in comps:
            assert not (union & c.pixels)  # pairwise disjoint
            union |= c.pixels
            total += c.area
        nonzero = {(r, c) for r, c in zip(*np.nonzero(mask))}
        assert union == nonzero
        assert total == len(nonzero)

    def test_order_is_label_then_position(self):
        mask = np.array([[2, 0, 1], [0, 0, 0], [1, 0, 2]])
        comps = connected_components(mask, 4)
        keys = [(c.label, min(c.pixels)) for c in comps]
        assert keys == sorted(keys)

    def test_bad_connectivity_rejected(self):
        with pytest.raises(InvalidArgumentError):
            connected_components(np.ones((2, 2), dtype=int), connectivity=6)


class TestFilterAndBBox:
    def _comp(self, pixels, label=1):
        return Component(pixels=frozenset(pixels), label=label)

    def test_filter_small_keeps_large(self):
        comps = [
            self._comp({(0, i) for i in range(5)}),
            self._comp({(r, c) for r in range(10) for c in range(12)}),
            self._comp({(r, c) for r in range(9) for c in range(11)}),
        ]
        kept = filter_small(comps, 100)
        assert kept == [comps[1]]

    def test_filter_small_zero_threshold_is_identity(self):
        comps = [self._comp({(0, 0)}), self._comp({(1, 1)})]
        assert filter_small(comps, 0) == comps

    def test_filter_small_can_drop_all(self):
        assert filter_small([self._comp({(0, 0)})], 2) == []

    def test_bbox_min_max(self):
        assert bounding_box(self._comp({(1, 1), (2, 3)})) == BBox(1, 1, 2, 3)

    def test_bbox_single_pixel(self):
        assert bounding_box(self._comp({(4, 7)})) == BBox(4, 7, 4, 7)

    def test_bbox_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            pts = {(int(r), int(c)) for r, c in rng.integers(0, 50, size=(12, 2))}
            box = bounding_box(self._comp(pts))
            rows = sorted(p[0] for p in pts)
            cols = sorted(p[1] for p in pts)
            assert box == BBox(rows[0], cols[0], rows[-1], cols[-1])


class TestCrop:
    def test_subraster(self):
        img = np.arange(4 * 4 * 3, dtype=np.uint8).reshape(4, 4, 3)
        out = crop(img, BBox(1, 0, 2, 1))
        assert np.array_equal(out, img[1:3, 0:2])

    def test_full_image_crop_is_identity(self):
        img = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
        assert np.array_equal(crop(img, BBox(0, 0, 1, 2)), img)

    def test_single_pixel_crop(self):
        img = np.arange(2 * 2 * 3, dtype=np.uint8).reshape(2, 2, 3)
        out = crop(img, BBox(0, 0, 0, 0))
        assert out.shape == (1, 1, 3)
        assert np.array_equal(out[0, 0], img[0, 0])

    def test_out_of_bounds_rejected(self):
        img = np.zeros((4, 4, 3), dtype=np.uint8)
        with pytest.raises(InvalidArgumentError):
            crop(img, BBox(0, 0, 4, 2))


class TestExtractRegions:
    def test_region_ids_dense_and_patches_match_bboxes(self):
        rng = np.random.default_rng(5)
        img = rng.integers(0, 255, size=(40, 40, 3), dtype=np.uint8)
        mask = random_mask(rng, 40, 40, n_labels=3)
        regs = extract_regions(mask, img, min_area=5)
        assert [r.region_id for r in regs] == list(range(len(regs)))
        for r in regs:
            assert r.patch.shape == (r.bbox.height, r.bbox.width, 3)

    def test_mask_resized_to_image(self):
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        mask = np.array([[1, 0], [0, 0]])
        regs = extract_regions(mask, img, min_area=1)
        assert len(regs) == 1
        assert regs[0].bbox == BBox(0, 0, 3, 3)
