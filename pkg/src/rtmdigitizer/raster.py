"""Grayscale raster and binary mask primitives shared by every stage.

Luminance convention: 0 is ink (black), 255 is background (white).
Binary masks carry no fixed polarity; each call site documents what 1 means.
Bounding boxes use inclusive pixel corners, so a box from (0, 0) to (9, 9)
covers a 10 by 10 pixel area.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DegenerateCropError, MaskDimensionError


@dataclass(frozen=True, eq=False)
class Raster:
    """Immutable 8-bit grayscale image, row-major, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.uint8, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"raster needs a 2-D array with positive dims, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Raster):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Immutable bit plane, row-major, shape (height, width), values 0 or 1."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.array(self.bits, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask needs a 2-D array with positive dims, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            if not np.isin(arr, (0, 1)).all():
                raise ValueError("mask values must be 0 or 1")
            arr = arr.astype(np.bool_)
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count_ones(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box with inclusive integer corners."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)):
                raise ValueError(f"box corner {name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"box corners must be non-negative: {self}")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValueError(f"box corners out of order: {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def center_x(self) -> float:
        return (self.x_min + self.x_max) / 2.0

    @property
    def center_y(self) -> float:
        return (self.y_min + self.y_max) / 2.0

    def padded(self, padding: int) -> "BoundingBox":
        """Expand every side by `padding`, clamping the top-left at zero."""
        if padding < 0:
            raise ValueError("padding must be non-negative")
        return BoundingBox(
            max(0, self.x_min - padding),
            max(0, self.y_min - padding),
            self.x_max + padding,
            self.y_max + padding,
        )


def binarize(image: Raster, threshold: int = 128) -> BinaryMask:
    """Threshold a raster: bit 1 where luminance >= threshold (background)."""
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    return BinaryMask(image.pixels >= threshold)


def invert(mask: BinaryMask) -> BinaryMask:
    return BinaryMask(~mask.bits)


def xor(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    if a.bits.shape != b.bits.shape:
        raise MaskDimensionError(f"xor dimensions differ: {a.bits.shape} vs {b.bits.shape}")
    return BinaryMask(a.bits ^ b.bits)


def erode(mask: BinaryMask, radius: int) -> BinaryMask:
    """Erode with a square structuring element of side 2*radius + 1.

    A bit survives only when every bit inside the square centered on it is 1;
    pixels outside the mask count as 0, so ink touching the edge is eaten.
    """
    if radius < 1:
        raise ValueError(f"erosion radius must be >= 1, got {radius}")
    side = 2 * radius + 1
    structure = np.ones((side, side), dtype=bool)
    return BinaryMask(ndimage.binary_erosion(mask.bits, structure=structure, border_value=0))


def crop(image: Raster, box: BoundingBox) -> Raster:
    """Extract the sub-raster under `box`, clamped to the image bounds."""
    if box.x_min > image.width - 1 or box.y_min > image.height - 1:
        raise DegenerateCropError(f"box {box} lies outside a {image.width}x{image.height} raster")
    x1 = min(box.x_max, image.width - 1)
    y1 = min(box.y_max, image.height - 1)
    return Raster(image.pixels[box.y_min : y1 + 1, box.x_min : x1 + 1])


def resize_to(image: Raster, width: int, height: int) -> Raster:
    """Nearest-neighbor resample to exactly width x height."""
    if width < 1 or height < 1:
        raise ValueError(f"target dimensions must be positive, got {width}x{height}")
    if width == image.width and height == image.height:
        return image
    rows = (np.arange(height) * image.height) // height
    cols = (np.arange(width) * image.width) // width
    return Raster(image.pixels[np.ix_(rows, cols)])


def mask_to_raster(mask: BinaryMask, ink_bit: int = 1) -> Raster:
    """Render a mask as a raster; bits equal to `ink_bit` become ink (0)."""
    if ink_bit not in (0, 1):
        raise ValueError("ink_bit must be 0 or 1")
    ink = mask.bits if ink_bit == 1 else ~mask.bits
    return Raster(np.where(ink, 0, 255).astype(np.uint8))


def load_raster(path: str | Path) -> Raster:
    """Decode a PNG or JPEG file into a grayscale raster."""
    with Image.open(path) as img:
        return Raster(np.asarray(img.convert("L"), dtype=np.uint8))


def save_raster(image: Raster, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(image.pixels), mode="L").save(path)
