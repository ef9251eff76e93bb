"""Removal of track lines and grid strokes from component crops.

Map symbols sit on top of long strokes (tracks, leaders, grid rules) that
enter the detection box from outside, so inside a crop those strokes always
touch the crop border. Label text never does. That asymmetry drives the
cleanup: binarize the crop, invert so ink is 1, seed a region grow from
every border ink pixel, and XOR the grown stroke mask back against the
original binarization. What survives is exactly the ink that is not
connected to the border, i.e. the glyphs.

Steps, in order:

1. base_copy          = binarize(crop)           (1 = background)
2. base_copy_inverted = invert(base_copy)        (1 = ink)
3. seeds              = border ink pixels of base_copy_inverted
4. grown              = region_grow(base_copy_inverted, seeds)
5. inverted_grown     = invert(grown)
6. final              = xor(inverted_grown, base_copy)   (1 = kept glyph ink)
7. optional square erosion of `final` to thin heavy strokes for OCR

The grown mask is a subset of the ink, so `final` equals ink minus the
border-connected components. Erosion only ever shrinks it further.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidSeedError
from .raster import (
    BinaryMask,
    BoundingBox,
    Raster,
    binarize,
    erode,
    invert,
    mask_to_raster,
    save_raster,
    xor,
)

DEFAULT_CONNECTIVITY = 8


@dataclass(frozen=True)
class SeedSet:
    """Starting coordinates for a region grow, as (x, y) pairs."""

    coords: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple((int(x), int(y)) for x, y in self.coords))

    def __len__(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class CleanedCrop:
    """Result of cleaning one crop.

    glyphs:           1 = retained glyph ink, same shape as the source crop
    provenance:       where the crop came from in the full image
    removed_fraction: share of the crop's ink that was border-connected;
                      1.0 means everything was removed (flagged upstream),
                      0.0 when the crop had no ink at all
    """

    glyphs: BinaryMask
    provenance: BoundingBox
    removed_fraction: float

    def __post_init__(self):
        if not 0.0 <= self.removed_fraction <= 1.0:
            raise ValueError(f"removed_fraction must be in [0, 1], got {self.removed_fraction}")


def border_seeds(mask: BinaryMask) -> SeedSet:
    """Collect every border pixel with bit 1, each coordinate listed once.

    Order is deterministic: top row, bottom row, then the left and right
    columns excluding the corners already covered by the rows.
    """
    bits = mask.bits
    h, w = bits.shape
    coords: list[tuple[int, int]] = []
    coords.extend((x, 0) for x in range(w) if bits[0, x])
    if h > 1:
        coords.extend((x, h - 1) for x in range(w) if bits[h - 1, x])
    for y in range(1, h - 1):
        if bits[y, 0]:
            coords.append((0, y))
        if w > 1 and bits[y, w - 1]:
            coords.append((w - 1, y))
    return SeedSet(tuple(coords))


def _spread_once(frontier: np.ndarray, connectivity: int) -> np.ndarray:
    out = frontier.copy()
    out[1:, :] |= frontier[:-1, :]
    out[:-1, :] |= frontier[1:, :]
    out[:, 1:] |= frontier[:, :-1]
    out[:, :-1] |= frontier[:, 1:]
    if connectivity == 8:
        out[1:, 1:] |= frontier[:-1, :-1]
        out[1:, :-1] |= frontier[:-1, 1:]
        out[:-1, 1:] |= frontier[1:, :-1]
        out[:-1, :-1] |= frontier[1:, 1:]
    return out


def region_grow(mask: BinaryMask, seeds: SeedSet, connectivity: int = DEFAULT_CONNECTIVITY) -> BinaryMask:
    """Grow the seed pixels through the mask's 1-region until stable.

    Returns the union of the connected components containing the seeds.
    Growth is breadth-first over whole frontiers (no recursion), so crops up
    to full map size are safe. Every seed must sit on a 1 pixel.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    bits = mask.bits
    grown = np.zeros_like(bits)
    for x, y in seeds.coords:
        if not (0 <= y < bits.shape[0] and 0 <= x < bits.shape[1]):
            raise InvalidSeedError(f"seed ({x}, {y}) outside {mask.width}x{mask.height} mask")
        if not bits[y, x]:
            raise InvalidSeedError(f"seed ({x}, {y}) sits on a 0 pixel")
        grown[y, x] = True
    count = int(grown.sum())
    while count:
        grown = _spread_once(grown, connectivity) & bits
        new_count = int(grown.sum())
        if new_count == count:
            break
        count = new_count
    return BinaryMask(grown)


def clean_crop(
    crop: Raster,
    threshold: int = 128,
    erode_radius: int = 1,
    connectivity: int = DEFAULT_CONNECTIVITY,
    provenance: BoundingBox | None = None,
) -> CleanedCrop:
    """Strip border-connected ink from a crop and keep the glyphs.

    `erode_radius` thins the surviving glyph strokes after cleanup (0
    disables). The removed fraction is measured before erosion.
    """
    if not 0 <= erode_radius <= 3:
        raise ValueError(f"erode_radius must be in [0, 3], got {erode_radius}")
    if provenance is None:
        provenance = BoundingBox(0, 0, crop.width - 1, crop.height - 1)
    base_copy = binarize(crop, threshold)
    ink = invert(base_copy)
    grown = region_grow(ink, border_seeds(ink), connectivity)
    final = xor(invert(grown), base_copy)
    ink_count = ink.count_ones()
    removed = grown.count_ones() / ink_count if ink_count else 0.0
    glyphs = erode(final, erode_radius) if erode_radius > 0 else final
    return CleanedCrop(glyphs=glyphs, provenance=provenance, removed_fraction=removed)


def border_connected_ink(crop: Raster, threshold: int = 128, connectivity: int = DEFAULT_CONNECTIVITY) -> BinaryMask:
    """The stroke mask that clean_crop removes, for debug rendering."""
    ink = invert(binarize(crop, threshold))
    return region_grow(ink, border_seeds(ink), connectivity)


def glyphs_to_ocr_raster(glyphs: BinaryMask) -> Raster:
    """Re-invert a glyph mask to the dark-text-on-light polarity OCR expects."""
    return mask_to_raster(glyphs, ink_bit=1)


def write_debug_triptych(
    debug_dir: str | Path,
    image_id: str,
    crop_index: int,
    crop: Raster,
    grown: BinaryMask,
    glyphs: BinaryMask,
) -> None:
    """Save the crop, the removed-stroke mask, and the cleaned glyphs."""
    base = Path(debug_dir) / image_id
    stem = f"crop_{crop_index:03d}"
    save_raster(crop, base / f"{stem}_original.png")
    save_raster(mask_to_raster(grown, ink_bit=1), base / f"{stem}_removed.png")
    save_raster(mask_to_raster(glyphs, ink_bit=1), base / f"{stem}_cleaned.png")
