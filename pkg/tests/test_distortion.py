from __future__ import annotations

import random

import numpy as np
import pytest
from scipy import ndimage

from rtmdigitizer import glyphs
from rtmdigitizer.distortion import (
    SeedSet,
    border_connected_ink,
    border_seeds,
    clean_crop,
    glyphs_to_ocr_raster,
    region_grow,
    write_debug_triptych,
)
from rtmdigitizer.errors import InvalidSeedError
from rtmdigitizer.raster import BinaryMask, Raster, binarize, invert


def _mask(rows) -> BinaryMask:
    return BinaryMask(np.array(rows))


def _random_mask(rng: random.Random, max_side: int = 32) -> BinaryMask:
    h = rng.randint(1, max_side)
    w = rng.randint(1, max_side)
    density = rng.choice([0.1, 0.3, 0.5, 0.8])
    return BinaryMask(np.array([[rng.random() < density for _ in range(w)] for _ in range(h)]))


def _oracle_glyphs(ink: np.ndarray, connectivity: int) -> np.ndarray:
    """Ink minus border-touching components, via an independent labeller."""
    structure = np.ones((3, 3), dtype=bool) if connectivity == 8 else None
    labels, _ = ndimage.label(ink, structure=structure)
    border = np.unique(
        np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    )
    border = border[border != 0]
    return ink & ~np.isin(labels, border)


def test_border_seeds_examples():
    assert border_seeds(_mask(np.zeros((4, 4), dtype=int))).coords == ()

    ring = border_seeds(_mask(np.ones((3, 3), dtype=int)))
    assert len(ring.coords) == 8
    assert (1, 1) not in ring.coords

    interior = np.zeros((5, 5), dtype=int)
    interior[2, 2] = 1
    assert border_seeds(_mask(interior)).coords == ()


def test_border_seeds_never_lists_interior_pixels():
    rng = random.Random(43)
    for _ in range(40):
        m = _random_mask(rng, max_side=16)
        for x, y in border_seeds(m).coords:
            assert x == 0 or x == m.width - 1 or y == 0 or y == m.height - 1
            assert m.bits[y, x]


def test_region_grow_with_no_seeds_is_empty():
    m = _mask(np.ones((3, 3), dtype=int))
    assert not region_grow(m, SeedSet(coords=())).bits.any()


def test_region_grow_fills_a_full_width_line_from_its_ends():
    bits = np.zeros((5, 9), dtype=int)
    bits[2, :] = 1
    m = _mask(bits)
    seeds = SeedSet(coords=((0, 2), (8, 2)))
    assert region_grow(m, seeds).bits.tolist() == bits.astype(bool).tolist()


def test_region_grow_leaves_interior_blob_untouched():
    bits = np.zeros((9, 9), dtype=int)
    bits[0, 0:5] = 1  # L-shaped stroke hugging the border
    bits[0:5, 0] = 1
    bits[5:8, 5:8] = 1  # isolated interior blob
    m = _mask(bits)
    grown = region_grow(m, border_seeds(m))
    expected = bits.copy()
    expected[5:8, 5:8] = 0
    assert grown.bits.tolist() == expected.astype(bool).tolist()


def test_region_grow_rejects_seed_on_background():
    m = _mask(np.zeros((3, 3), dtype=int))
    with pytest.raises(InvalidSeedError):
        region_grow(m, SeedSet(coords=((0, 0),)))


def test_region_grow_rejects_out_of_bounds_seed():
    m = _mask(np.ones((3, 3), dtype=int))
    with pytest.raises(InvalidSeedError):
        region_grow(m, SeedSet(coords=((5, 0),)))


def test_region_grow_output_is_a_fixed_point():
    rng = random.Random(47)
    for _ in range(30):
        m = _random_mask(rng)
        grown = region_grow(m, border_seeds(m))
        seeds_again = border_seeds(grown)
        if seeds_again.coords:
            assert region_grow(grown, seeds_again) == grown


def test_connectivity_choice_changes_diagonal_reach():
    bits = np.zeros((4, 4), dtype=int)
    bits[0, 0] = 1
    bits[1, 1] = 1
    m = _mask(bits)
    seeds = border_seeds(m)
    assert region_grow(m, seeds, connectivity=8).count_ones() == 2
    assert region_grow(m, seeds, connectivity=4).count_ones() == 1


def _raster_from_ink(ink: np.ndarray) -> Raster:
    return Raster(np.where(ink, 0, 255).astype(np.uint8))


def test_clean_crop_on_pure_background():
    cleaned = clean_crop(Raster(np.full((8, 8), 255, dtype=np.uint8)), erode_radius=0)
    assert not cleaned.glyphs.bits.any()
    assert cleaned.removed_fraction == 0.0


def test_clean_crop_removes_a_through_track_line_entirely():
    ink = np.zeros((10, 20), dtype=bool)
    ink[5, :] = True
    cleaned = clean_crop(_raster_from_ink(ink), erode_radius=0)
    assert not cleaned.glyphs.bits.any()
    assert cleaned.removed_fraction == 1.0


def test_clean_crop_keeps_interior_text_and_drops_the_line():
    """A rendered label with a border-crossing stroke nearby comes out as
    exactly the label's ink."""
    text = glyphs.render_text("SW-3")  # BinaryMask, 1 = ink
    h = text.height + 20
    w = text.width + 16
    ink = np.zeros((h, w), dtype=bool)
    ink[10 : 10 + text.height, 8 : 8 + text.width] = text.bits
    ink[2, :] = True  # track line crossing the whole crop above the text
    cleaned = clean_crop(_raster_from_ink(ink), erode_radius=0)
    expected = np.zeros_like(ink)
    expected[10 : 10 + text.height, 8 : 8 + text.width] = text.bits
    assert cleaned.glyphs.bits.tolist() == expected.tolist()
    removed = ink.sum() - expected.sum()
    assert cleaned.removed_fraction == pytest.approx(removed / ink.sum())


def test_clean_crop_glyphs_are_subset_of_ink():
    rng = random.Random(53)
    for _ in range(40):
        h, w = rng.randint(2, 24), rng.randint(2, 24)
        pixels = np.array(
            [[rng.choice((0, 255)) for _ in range(w)] for _ in range(h)], dtype=np.uint8
        )
        img = Raster(pixels)
        ink = invert(binarize(img, 128))
        pre = clean_crop(img, erode_radius=0)
        assert not (pre.glyphs.bits & ~ink.bits).any()
        post = clean_crop(img, erode_radius=1)
        assert not (post.glyphs.bits & ~pre.glyphs.bits).any()
        assert 0.0 <= pre.removed_fraction <= 1.0


@pytest.mark.parametrize("connectivity", [4, 8])
def test_clean_crop_agrees_with_labelling_oracle(connectivity):
    rng = random.Random(59 + connectivity)
    for _ in range(200):
        m = _random_mask(rng)
        img = _raster_from_ink(m.bits)
        got = clean_crop(img, erode_radius=0, connectivity=connectivity).glyphs
        assert got.bits.tolist() == _oracle_glyphs(m.bits, connectivity).tolist()


def test_border_connected_ink_is_the_removed_complement():
    rng = random.Random(61)
    for _ in range(20):
        m = _random_mask(rng)
        img = _raster_from_ink(m.bits)
        removed = border_connected_ink(img)
        kept = clean_crop(img, erode_radius=0).glyphs
        assert not (removed.bits & kept.bits).any()
        assert ((removed.bits | kept.bits) == m.bits).all()


def test_glyphs_to_ocr_raster_polarity():
    out = glyphs_to_ocr_raster(_mask(np.array([[1, 0]])))
    assert out.pixels.tolist() == [[0, 255]]


def test_write_debug_triptych_writes_three_images(tmp_path):
    ink = np.zeros((6, 6), dtype=bool)
    ink[3, :] = True
    img = _raster_from_ink(ink)
    cleaned = clean_crop(img, erode_radius=0)
    write_debug_triptych(tmp_path, "img_x", 4, img, border_connected_ink(img), cleaned.glyphs)
    names = sorted(p.name for p in (tmp_path / "img_x").iterdir())
    assert names == ["crop_004_cleaned.png", "crop_004_original.png", "crop_004_removed.png"]
