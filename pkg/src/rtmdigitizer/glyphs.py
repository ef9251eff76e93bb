"""Monospaced glyph atlas used by label rendering and template OCR.

Each character is a 5x7 cell bitmap scaled up by an integer factor, so
every atlas glyph is built from solid scale x scale blocks. Text renders
left to right on a fixed advance (cell width plus a fixed gap), which keeps
at least one blank column between adjacent characters and makes column
segmentation trivial for the matcher.

The base bitmaps are deliberately drawn so that no two characters are
identical, including the lookalike pairs 0/O, 1/I, 2/Z, 5/S, and 8/B.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .raster import BinaryMask

GLYPH_SCALE = 4
BASE_WIDTH = 5
BASE_HEIGHT = 7
CELL_WIDTH = BASE_WIDTH * GLYPH_SCALE
CELL_HEIGHT = BASE_HEIGHT * GLYPH_SCALE
CELL_GAP = 2 * GLYPH_SCALE
CELL_ADVANCE = CELL_WIDTH + CELL_GAP

ATLAS_CHARS = "0123456789.-ABCDEFGHIJKLMNOPQRSTUVWXYZ ?"

_FONT: dict[str, tuple[str, ...]] = {
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    "3": (".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
    ".": (".....", ".....", ".....", ".....", ".....", ".##..", ".##.."),
    "-": (".....", ".....", ".....", ".###.", ".....", ".....", "....."),
    "A": (".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "B": ("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),
    "C": (".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."),
    "D": ("####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."),
    "E": ("#####", "#....", "#....", "####.", "#....", "#....", "#####"),
    "F": ("#####", "#....", "#....", "####.", "#....", "#....", "#...."),
    "G": (".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"),
    "H": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "I": (".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "J": ("..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "K": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "L": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "M": ("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),
    "N": ("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"),
    "O": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "P": ("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),
    "Q": (".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),
    "R": ("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),
    "S": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "T": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "U": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "V": ("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "W": ("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"),
    "X": ("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),
    "Y": ("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),
    "Z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    " ": (".....", ".....", ".....", ".....", ".....", ".....", "....."),
    "?": (".###.", "#...#", "....#", "..##.", "..#..", ".....", "..#.."),
}


def _cell_bits(char: str) -> np.ndarray:
    rows = _FONT[char]
    base = np.array([[c == "#" for c in row] for row in rows], dtype=bool)
    return np.kron(base, np.ones((GLYPH_SCALE, GLYPH_SCALE), dtype=bool))


@lru_cache(maxsize=1)
def glyph_atlas() -> dict[str, BinaryMask]:
    """Scaled cell bitmap for every supported character, 1 = ink."""
    return {char: BinaryMask(_cell_bits(char)) for char in ATLAS_CHARS}


def atlas_chars() -> str:
    return ATLAS_CHARS


def text_width(text: str) -> int:
    """Rendered width in pixels, without a trailing inter-cell gap."""
    if not text:
        return 0
    return len(text) * CELL_ADVANCE - CELL_GAP


def render_text(text: str) -> BinaryMask:
    """Render one line of text as an ink mask (1 = ink).

    Characters outside the atlas raise KeyError. The mask is exactly
    text_width(text) wide and one cell high.
    """
    if not text:
        raise ValueError("cannot render empty text")
    canvas = np.zeros((CELL_HEIGHT, text_width(text)), dtype=bool)
    for k, char in enumerate(text):
        if char not in _FONT:
            raise KeyError(f"character {char!r} is not in the glyph atlas")
        x0 = k * CELL_ADVANCE
        canvas[:, x0 : x0 + CELL_WIDTH] = _cell_bits(char)
    return BinaryMask(canvas)


@dataclass(frozen=True)
class GlyphVariant:
    """One matchable appearance of a character.

    `radius` is the square-erosion radius already applied to the bitmap,
    `tight` is the ink cropped to its bounding box, and the offsets locate
    that tight box inside the character's cell.
    """

    char: str
    radius: int
    tight: np.ndarray
    col_offset: int
    row_offset: int


def _erode_bits(bits: np.ndarray, radius: int) -> np.ndarray:
    from scipy import ndimage

    side = 2 * radius + 1
    return ndimage.binary_erosion(bits, structure=np.ones((side, side), dtype=bool), border_value=0)


@lru_cache(maxsize=4)
def atlas_variants(max_radius: int = 1) -> tuple[GlyphVariant, ...]:
    """Tight glyph bitmaps at erosion radii 0..max_radius, for matching.

    The cleanup stage may have thinned the glyphs with a small erosion, so
    the matcher compares segments against eroded renders as well as the
    originals. Eroded variants that vanish entirely are dropped.
    """
    variants: list[GlyphVariant] = []
    for char in ATLAS_CHARS:
        if char == " ":
            continue
        cell = _cell_bits(char)
        for radius in range(max_radius + 1):
            bits = _erode_bits(cell, radius) if radius else cell
            if not bits.any():
                continue
            rows = np.flatnonzero(bits.any(axis=1))
            cols = np.flatnonzero(bits.any(axis=0))
            tight = bits[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1].copy()
            tight.setflags(write=False)
            variants.append(GlyphVariant(char, radius, tight, int(cols[0]), int(rows[0])))
    return tuple(variants)
