"""Text recognition for cleaned crops, plus class-aware text filtering.

Two engines are provided. The template engine matches atlas-rendered
glyphs by pixel difference and is fully deterministic, which makes it the
default for tests and synthetic corpora. The external-command engine shells
out to any OCR program that takes an image path and prints text, so real
deployments can swap in Tesseract or a service without code changes.
"""

from __future__ import annotations

import re
import shlex
import string
import subprocess
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import json

import numpy as np

from . import glyphs
from .detections import ComponentClass, parse_class_label
from .errors import OcrEngineError
from .raster import Raster, save_raster

# A segment whose best template disagrees on more than this share of its
# pixels is reported as the placeholder instead of a bogus character.
REJECT_DIFF_RATIO = 0.25
PLACEHOLDER = "?"

_DIGITS = string.digits
_UPPER = string.ascii_uppercase


@dataclass(frozen=True)
class OcrResult:
    """Raw engine output for one crop, before any class filtering."""

    raw_text: str
    engine_id: str

    def __post_init__(self):
        if not self.engine_id:
            raise ValueError("engine_id must be non-empty")


@dataclass(frozen=True)
class CharsetPolicy:
    """Per-class allowed characters and the normalization switches.

    allowed maps every component class to its permitted characters.
    substitutions are applied before deletion, so common confusions such as
    a decimal comma can be repaired instead of dropped.
    """

    allowed: dict[ComponentClass, frozenset[str]]
    uppercase: bool = True
    collapse_whitespace: bool = True
    trim_edges: bool = True
    substitutions: dict[str, str] = field(default_factory=lambda: {",": "."})

    def __post_init__(self):
        object.__setattr__(self, "allowed", {k: frozenset(v) for k, v in self.allowed.items()})
        object.__setattr__(self, "substitutions", dict(self.substitutions))
        for cls in ComponentClass:
            if cls not in self.allowed:
                raise ValueError(f"charset policy missing class {cls.label}")
            if not self.allowed[cls]:
                raise ValueError(f"charset for {cls.label} must be non-empty")


def default_charset_policy() -> CharsetPolicy:
    """Built-in charsets: digits and a dot for mileposts (plus the space
    that separates doubled-up milepost numbers), alphanumerics with
    punctuation for everything else, spaces only where names occur."""
    named = frozenset(_UPPER + _DIGITS + " -.")
    coded = frozenset(_UPPER + _DIGITS + "-.")
    return CharsetPolicy(
        allowed={
            ComponentClass.MILEPOST: frozenset(_DIGITS + ". "),
            ComponentClass.CROSSING: coded,
            ComponentClass.CROSSING_LABEL: named,
            ComponentClass.SIGNAL: coded,
            ComponentClass.SWITCH: coded,
            ComponentClass.CLEARANCE_POINT: coded,
            ComponentClass.CP_NAME: named,
            ComponentClass.ELECT_SWITCH: coded,
        }
    )


def load_charset_policy(path: str | Path) -> CharsetPolicy:
    """Read charset overrides from a JSON file, merged over the defaults.

    Recognized keys: "charsets" (class label -> allowed characters),
    "uppercase", "collapse_whitespace", "trim_edges", "substitutions".
    """
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: charset config must be a JSON object")
    base = default_charset_policy()
    allowed = dict(base.allowed)
    for label, chars in payload.get("charsets", {}).items():
        if not isinstance(chars, str) or not chars:
            raise ValueError(f"{path}: charset for {label!r} must be a non-empty string")
        allowed[parse_class_label(label)] = frozenset(chars)
    return CharsetPolicy(
        allowed=allowed,
        uppercase=bool(payload.get("uppercase", base.uppercase)),
        collapse_whitespace=bool(payload.get("collapse_whitespace", base.collapse_whitespace)),
        trim_edges=bool(payload.get("trim_edges", base.trim_edges)),
        substitutions=dict(payload.get("substitutions", base.substitutions)),
    )


def filter_text(raw: OcrResult | str, component_class: ComponentClass, policy: CharsetPolicy) -> str:
    """Reduce raw OCR output to the characters plausible for the class.

    Applies, in order: uppercase mapping, character substitutions, deletion
    of characters outside the class charset, whitespace collapsing, and
    trimming of leading and trailing punctuation. The result is a fixed
    point: filtering twice returns the same string.
    """
    text = raw.raw_text if isinstance(raw, OcrResult) else raw
    if policy.uppercase:
        text = text.upper()
    if policy.substitutions:
        text = text.translate(str.maketrans(policy.substitutions))
    allowed = policy.allowed[component_class]
    text = "".join(c for c in text if c in allowed)
    if policy.collapse_whitespace:
        text = " ".join(text.split())
    if policy.trim_edges:
        text = text.strip(".- ")
    return text


_NUMBER = re.compile(r"\d+(?:\.\d+)?")


def parse_milepost_numbers(text: str) -> list[float]:
    """Extract every maximal decimal number, in reading order.

    A second dot ends the number, so "23.4 23.5" gives two values and a
    stray "23.4.5" never produces a two-dot token.
    """
    return [float(m.group()) for m in _NUMBER.finditer(text)]


class OcrEngine(ABC):
    """Recognition seam. Engines turn a glyph raster into raw text."""

    engine_id: str = ""
    concurrent_safe: bool = True

    @abstractmethod
    def recognize(self, image: Raster) -> OcrResult: ...


@dataclass(frozen=True)
class _Segment:
    col_start: int
    col_end: int  # inclusive
    tight: np.ndarray


# Erosion opens gaps of up to 2 columns inside a character wherever two
# strokes meet, while the rendering advance keeps characters at least 8
# columns apart (10 once eroded). Splitting only on wider runs keeps a
# thinned character in one piece without ever merging neighbors.
SEGMENT_SPLIT_GAP = 4


def _ink_segments(ink: np.ndarray, split_gap: int = SEGMENT_SPLIT_GAP) -> list[_Segment]:
    """Split ink into column spans separated by >= split_gap blank columns."""
    occupied = ink.any(axis=0)
    if not occupied.any():
        return []
    edges = np.flatnonzero(np.diff(np.concatenate(([False], occupied, [False]))))
    runs = list(zip(edges[::2], edges[1::2]))
    merged = [list(runs[0])]
    for start, stop in runs[1:]:
        if start - merged[-1][1] < split_gap:
            merged[-1][1] = stop
        else:
            merged.append([start, stop])
    segments = []
    for start, stop in merged:
        block = ink[:, start:stop]
        rows = np.flatnonzero(block.any(axis=1))
        segments.append(_Segment(int(start), int(stop) - 1, block[rows[0] : rows[-1] + 1, :]))
    return segments


class TemplateEngine(OcrEngine):
    """Deterministic matcher against the bundled glyph atlas.

    Works on single-line text rendered from the atlas, including renders
    thinned by the cleanup stage's erosion: segments are compared against
    eroded atlas variants as well, so an exact render at either state
    recovers its text with zero pixel difference. Segments that match
    nothing well become the placeholder character.
    """

    engine_id = "template"
    concurrent_safe = True

    def __init__(self, max_erosion_radius: int = 1):
        self._variants = glyphs.atlas_variants(max_erosion_radius)

    def recognize(self, image: Raster) -> OcrResult:
        ink = image.pixels < 128
        segments = _ink_segments(ink)
        if not segments:
            return OcrResult("", self.engine_id)
        pieces: list[str] = []
        prev_origin: int | None = None
        for seg in segments:
            char, col_offset = self._match(seg.tight)
            origin = seg.col_start - col_offset
            if prev_origin is not None:
                gap_cells = round((origin - prev_origin) / glyphs.CELL_ADVANCE) - 1
                pieces.append(" " * max(0, gap_cells))
            pieces.append(char)
            prev_origin = origin
        return OcrResult("".join(pieces), self.engine_id)

    def _match(self, tight: np.ndarray) -> tuple[str, int]:
        best_char = PLACEHOLDER
        best_offset = 0
        best_diff = None
        for variant in self._variants:
            if variant.tight.shape != tight.shape:
                continue
            diff = int(np.count_nonzero(variant.tight ^ tight))
            if best_diff is None or diff < best_diff:
                best_char, best_offset, best_diff = variant.char, variant.col_offset, diff
                if diff == 0:
                    break
        if best_diff is None or best_diff > REJECT_DIFF_RATIO * tight.size:
            return PLACEHOLDER, 0
        return best_char, best_offset


class ExternalCommandEngine(OcrEngine):
    """Adapter for an external OCR program.

    The command is run once per crop with the path of a temporary PNG
    appended; whatever it prints on stdout (UTF-8) is the recognized text.
    A nonzero exit status is reported as an engine failure.
    """

    concurrent_safe = True

    def __init__(self, command: str):
        if not command.strip():
            raise ValueError("external OCR command must be non-empty")
        self.command = command
        self.engine_id = f"cmd:{command}"

    def recognize(self, image: Raster) -> OcrResult:
        argv = shlex.split(self.command)
        with tempfile.TemporaryDirectory(prefix="rtm_ocr_") as tmp:
            crop_path = Path(tmp) / "crop.png"
            save_raster(image, crop_path)
            try:
                proc = subprocess.run(
                    argv + [str(crop_path)],
                    capture_output=True,
                    timeout=60,
                )
            except OSError as exc:
                raise OcrEngineError(self.engine_id, f"could not start: {exc}") from None
            except subprocess.TimeoutExpired:
                raise OcrEngineError(self.engine_id, "timed out after 60s") from None
        if proc.returncode != 0:
            detail = proc.stderr.decode("utf-8", errors="replace").strip()
            raise OcrEngineError(self.engine_id, f"exit status {proc.returncode}: {detail or 'no stderr'}")
        try:
            text = proc.stdout.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise OcrEngineError(self.engine_id, f"stdout is not UTF-8: {exc}") from None
        return OcrResult(text.rstrip("\r\n"), self.engine_id)


def make_engine(name: str) -> OcrEngine:
    """Build an engine from its config spelling: "template" or "cmd:<command>"."""
    if name == "template":
        return TemplateEngine()
    if name.startswith("cmd:"):
        return ExternalCommandEngine(name[len("cmd:") :])
    raise ValueError(f"unknown OCR engine {name!r}; expected 'template' or 'cmd:<command>'")
