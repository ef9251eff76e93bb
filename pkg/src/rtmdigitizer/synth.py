"""Deterministic synthetic map generator with exact ground truth.

Generated images imitate the parts of a scanned technical map that matter
to the pipeline: horizontal track lines, milepost markers along the bottom,
and labeled components in lanes above them. Every component box contains
its label text (kept clear of everything else) plus strokes that enter the
box from outside, so the cleanup stage has real work to do, while the text
itself survives untouched. The same seed always produces the same bytes.

Scale: the canonical map is 4500x2400; tests run at quarter scale 1125x600.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import glyphs
from .association import ComponentRecord
from .detections import ComponentClass, Detection, DetectionSet, save_detections
from .errors import LayoutError
from .evaluation import GroundTruthSet
from .ocr import default_charset_policy, filter_text
from .raster import BinaryMask, BoundingBox, Raster, save_raster

FULL_WIDTH = 4500
FULL_HEIGHT = 2400
QUARTER_WIDTH = 1125
QUARTER_HEIGHT = 600

MIN_WIDTH = 300
MIN_HEIGHT = 380

BOX_HEIGHT = 52
BOX_TEXT_PAD_X = 8
LANE_COUNT = 3
LANE_PITCH = 70
MIN_BOX_GAP = 10
ZONE_MARGIN = 5

_NON_MILEPOST = tuple(c for c in ComponentClass if c is not ComponentClass.MILEPOST)


@dataclass(frozen=True)
class ComponentSpec:
    component_class: ComponentClass
    milepost_index: int
    label: str


@dataclass(frozen=True)
class LayoutSpec:
    """Recipe for one synthetic image."""

    seed: int
    image_width: int = QUARTER_WIDTH
    image_height: int = QUARTER_HEIGHT
    milepost_count: int = 2
    components: tuple[ComponentSpec, ...] = ()
    track_lines: int = 2
    distortion_density: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.image_width < MIN_WIDTH or self.image_height < MIN_HEIGHT:
            raise LayoutError(f"canvas {self.image_width}x{self.image_height} below minimum {MIN_WIDTH}x{MIN_HEIGHT}")
        if self.milepost_count < 0:
            raise LayoutError("milepost_count must be >= 0")
        if not 0 <= self.track_lines <= 6:
            raise LayoutError("track_lines must be in [0, 6]")
        if not 0.0 <= self.distortion_density <= 1.0:
            raise LayoutError("distortion_density must be in [0, 1]")
        policy = default_charset_policy()
        for comp in self.components:
            if comp.component_class is ComponentClass.MILEPOST:
                raise LayoutError("milepost markers come from milepost_count, not the component list")
            if not 0 <= comp.milepost_index < max(self.milepost_count, 1):
                raise LayoutError(f"component references milepost {comp.milepost_index} of {self.milepost_count}")
            if not comp.label:
                raise LayoutError("component labels must be non-empty")
            bad = set(comp.label) - set(glyphs.ATLAS_CHARS)
            if bad:
                raise LayoutError(f"label {comp.label!r} uses characters outside the atlas: {sorted(bad)}")
            if filter_text(comp.label, comp.component_class, policy) != comp.label:
                raise LayoutError(
                    f"label {comp.label!r} is not stable under {comp.component_class.label} text filtering"
                )


@dataclass(frozen=True)
class GroundTruthBundle:
    """A generated image with everything needed to verify a pipeline run."""

    image: Raster
    detections: DetectionSet
    gt: GroundTruthSet
    expected_records: tuple[ComponentRecord, ...]
    glyph_masks: dict[Detection, BinaryMask]


@dataclass
class _PlacedBox:
    box: BoundingBox
    text: str
    text_x: int
    text_y: int
    tick_exit_top: bool
    extra_stroke: bool
    hard_stroke: bool = False


def _format_value(value: float) -> str:
    return f"{value:g}"


def _interval_free(occupied: list[tuple[int, int]], x0: int, x1: int, gap: int) -> bool:
    return all(x1 + gap < a or b + gap < x0 for a, b in occupied)


class _Canvas:
    def __init__(self, width: int, height: int):
        self.ink = np.zeros((height, width), dtype=bool)
        self.width = width
        self.height = height

    def fill_rect(self, y0: int, y1: int, x0: int, x1: int) -> None:
        self.ink[max(0, y0) : y1 + 1, max(0, x0) : x1 + 1] = True

    def stamp_text(self, mask: BinaryMask, x: int, y: int) -> None:
        h, w = mask.bits.shape
        self.ink[y : y + h, x : x + w] |= mask.bits


def generate(spec: LayoutSpec, hard: bool = False) -> GroundTruthBundle:
    """Render a layout and derive its exact ground truth.

    In hard mode an extra stroke is drawn straight through each label, which
    corrupts the text on purpose; expected records still carry the clean
    label, so hard corpora measure degradation rather than define truth.
    Raises LayoutError when the components cannot be placed on the canvas.
    """
    rng = random.Random(spec.seed)
    width, height = spec.image_width, spec.image_height

    mp_values, mp_placed = _place_mileposts(spec, rng)
    centers = [p.box.center_x for p in mp_placed]
    zone_edges = _zone_edges(centers, width)
    comp_placed = _place_components(spec, rng, zone_edges, mp_placed)

    for placed in mp_placed + comp_placed:
        placed.extra_stroke = rng.random() < spec.distortion_density
        placed.hard_stroke = hard

    canvas = _Canvas(width, height)
    _draw_track_lines(canvas, spec.track_lines, height, width)
    for placed in mp_placed + comp_placed:
        _draw_box(canvas, placed)

    image = Raster(np.where(canvas.ink, 0, 255).astype(np.uint8))

    glyph_masks: dict[Detection, BinaryMask] = {}
    dets: list[Detection] = []
    for placed, cls in [(p, ComponentClass.MILEPOST) for p in mp_placed] + [
        (p, c.component_class) for p, c in zip(comp_placed, spec.components)
    ]:
        det = Detection(cls, placed.box, 1.0)
        dets.append(det)
        mask = np.zeros((placed.box.height, placed.box.width), dtype=bool)
        text_mask = glyphs.render_text(placed.text)
        ty = placed.text_y - placed.box.y_min
        tx = placed.text_x - placed.box.x_min
        mask[ty : ty + text_mask.height, tx : tx + text_mask.width] = text_mask.bits
        glyph_masks[det] = BinaryMask(mask)

    image_id = f"rtm_{spec.seed:05d}"
    dset = DetectionSet(image_id, width, height, tuple(dets))
    gt = GroundTruthSet(image_id, width, height, tuple((d.component_class, d.box) for d in dets))

    expected = []
    for placed, comp, det in zip(comp_placed, spec.components, dets[len(mp_placed) :]):
        values = sorted(set(mp_values[comp.milepost_index])) if spec.milepost_count else []
        expected.append(
            ComponentRecord(
                image_id=image_id,
                component_class=comp.component_class,
                text=comp.label,
                mileposts=tuple(values),
                box=det.box,
                score=1.0,
            )
        )
    expected.sort(
        key=lambda r: (
            (1,) if not r.mileposts else (0, r.mileposts[0]),
            r.component_class.label,
            r.box.x_min,
        )
    )
    return GroundTruthBundle(image, dset, gt, tuple(expected), glyph_masks)


def _place_mileposts(spec: LayoutSpec, rng: random.Random) -> tuple[list[list[float]], list[_PlacedBox]]:
    width, height = spec.image_width, spec.image_height
    n = spec.milepost_count
    values: list[list[float]] = []
    placed: list[_PlacedBox] = []
    if n == 0:
        return values, placed
    base = rng.randint(5, 80)
    y_min = height - 72
    for i in range(n):
        vals = [float(base + 3 * i)]
        if rng.random() < 0.3:
            vals.append(vals[0] + 0.5)
        values.append(vals)
        text = " ".join(_format_value(v) for v in vals)
        text_w = glyphs.text_width(text)
        box_w = text_w + 2 * BOX_TEXT_PAD_X
        slot = width / n
        jitter = slot / 12.0
        cx = (i + 0.5) * slot + rng.uniform(-jitter, jitter)
        x_min = int(round(cx - box_w / 2))
        x_min = max(2, min(x_min, width - 2 - box_w))
        box = BoundingBox(x_min, y_min, x_min + box_w - 1, y_min + BOX_HEIGHT - 1)
        placed.append(
            _PlacedBox(
                box=box,
                text=text,
                text_x=x_min + BOX_TEXT_PAD_X,
                text_y=y_min + 8,
                tick_exit_top=False,
                extra_stroke=False,
            )
        )
    for a, b in zip(placed, placed[1:]):
        if b.box.x_min - a.box.x_max - 1 < MIN_BOX_GAP:
            raise LayoutError("milepost markers overlap; fewer markers or a wider canvas needed")
    return values, placed


def _zone_edges(centers: list[float], width: int) -> list[tuple[float, float]]:
    edges = []
    for i, c in enumerate(centers):
        left = 0.0 if i == 0 else (centers[i - 1] + c) / 2.0
        right = float(width) if i == len(centers) - 1 else (c + centers[i + 1]) / 2.0
        edges.append((left, right))
    return edges


def _lane_y_min(lane: int, height: int) -> int:
    return height - 162 - lane * LANE_PITCH


def _place_components(
    spec: LayoutSpec,
    rng: random.Random,
    zone_edges: list[tuple[float, float]],
    mp_placed: list[_PlacedBox],
) -> list[_PlacedBox]:
    width = spec.image_width
    occupied: dict[int, list[tuple[int, int]]] = {lane: [] for lane in range(LANE_COUNT)}
    placed: list[_PlacedBox] = []
    for comp in spec.components:
        text_w = glyphs.text_width(comp.label)
        box_w = text_w + 2 * BOX_TEXT_PAD_X
        if zone_edges:
            z_left, z_right = zone_edges[comp.milepost_index]
        else:
            z_left, z_right = 0.0, float(width)
        lo = max(z_left + ZONE_MARGIN, (box_w - 1) / 2 + 2)
        hi = min(z_right - ZONE_MARGIN, width - 2 - box_w + (box_w - 1) / 2)
        if hi < lo:
            raise LayoutError(f"label {comp.label!r} is too wide for its milepost zone")
        spot = None
        for attempt in range(LANE_COUNT * 12):
            lane = attempt % LANE_COUNT
            cx = rng.uniform(lo, hi)
            x_min = int(round(cx - (box_w - 1) / 2))
            x_min = max(2, min(x_min, width - 2 - box_w))
            center = x_min + (box_w - 1) / 2
            if zone_edges and not (z_left + ZONE_MARGIN - 1 <= center <= z_right - ZONE_MARGIN + 1):
                continue
            if _interval_free(occupied[lane], x_min, x_min + box_w - 1, MIN_BOX_GAP):
                spot = (lane, x_min)
                break
        if spot is None:
            raise LayoutError(f"could not place {comp.component_class.label} {comp.label!r}; layout too crowded")
        lane, x_min = spot
        occupied[lane].append((x_min, x_min + box_w - 1))
        y_min = _lane_y_min(lane, spec.image_height)
        box = BoundingBox(x_min, y_min, x_min + box_w - 1, y_min + BOX_HEIGHT - 1)
        placed.append(
            _PlacedBox(
                box=box,
                text=comp.label,
                text_x=x_min + BOX_TEXT_PAD_X,
                text_y=y_min + 12,
                tick_exit_top=True,
                extra_stroke=False,
            )
        )
    return placed


def _draw_track_lines(canvas: _Canvas, count: int, height: int, width: int) -> None:
    ys = []
    for lane in range(LANE_COUNT):
        ys.append(_lane_y_min(lane, height) + 44)
    ys.extend([height - 90, height - 330, height - 360])
    for y in ys[:count]:
        canvas.fill_rect(y, y + 1, 0, width - 1)


def _draw_box(canvas: _Canvas, placed: _PlacedBox) -> None:
    box = placed.box
    text_mask = glyphs.render_text(placed.text)
    canvas.stamp_text(text_mask, placed.text_x, placed.text_y)
    cx = (box.x_min + box.x_max) // 2
    if placed.tick_exit_top:
        canvas.fill_rect(max(0, box.y_min - 4), box.y_min + 8, cx - 1, cx + 1)
    else:
        canvas.fill_rect(box.y_min + 40, min(canvas.height - 1, box.y_max + 4), cx - 1, cx + 1)
    if placed.extra_stroke:
        y = box.y_max - 3 if placed.tick_exit_top else box.y_min + 2
        canvas.fill_rect(y, y + 1, max(0, box.x_min - 4), min(canvas.width - 1, box.x_max + 4))
    if placed.hard_stroke:
        y = placed.text_y + glyphs.CELL_HEIGHT // 2
        canvas.fill_rect(y, y, max(0, box.x_min - 4), min(canvas.width - 1, box.x_max + 4))


def random_layout(seed: int, width: int = QUARTER_WIDTH, height: int = QUARTER_HEIGHT) -> LayoutSpec:
    """A varied but always-placeable layout derived from the seed."""
    rng = random.Random(seed * 2654435761 % 2**32)
    milepost_count = rng.randint(1, 3)
    capacity = {i: 3 for i in range(milepost_count)}
    count = rng.randint(2, min(6, 3 * milepost_count))
    components = []
    for _ in range(count):
        cls = _NON_MILEPOST[rng.randrange(len(_NON_MILEPOST))]
        open_zones = [i for i, c in capacity.items() if c > 0]
        mp_idx = open_zones[rng.randrange(len(open_zones))]
        capacity[mp_idx] -= 1
        components.append(ComponentSpec(cls, mp_idx, _random_label(cls, rng)))
    return LayoutSpec(
        seed=seed,
        image_width=width,
        image_height=height,
        milepost_count=milepost_count,
        components=tuple(components),
        track_lines=rng.randint(1, 4),
        distortion_density=rng.choice([0.0, 0.3, 0.6, 1.0]),
    )


def write_corpus(
    out_dir: str | Path,
    seed: int,
    count: int,
    hard: bool = False,
    width: int = QUARTER_WIDTH,
    height: int = QUARTER_HEIGHT,
) -> list[GroundTruthBundle]:
    """Write `count` generated maps under `out_dir`, seeds seed..seed+count-1.

    Produces <id>.png plus a scored <id>.json sidecar next to it, and the
    score-free ground truth under gt/<id>.json, so the directory can be fed
    straight to the digitize and evaluate commands. Returns the bundles for
    callers that also want the expected records.
    """
    out_dir = Path(out_dir)
    (out_dir / "gt").mkdir(parents=True, exist_ok=True)
    bundles = []
    for s in range(seed, seed + count):
        bundle = generate(random_layout(s, width, height), hard=hard)
        image_id = bundle.detections.image_id
        save_raster(bundle.image, out_dir / f"{image_id}.png")
        save_detections(bundle.detections, out_dir / f"{image_id}.json", include_scores=True)
        save_detections(bundle.detections, out_dir / "gt" / f"{image_id}.json", include_scores=False)
        bundles.append(bundle)
    return bundles


_CP_WORDS = ("ALPHA", "BRAVO", "DELTA", "ECHO", "MILO", "NORTH", "SOUTH")


def _random_label(cls: ComponentClass, rng: random.Random) -> str:
    if cls is ComponentClass.SIGNAL:
        return f"SG-{rng.randint(1, 99)}"
    if cls is ComponentClass.SWITCH:
        return f"SW-{rng.randint(1, 99)}"
    if cls is ComponentClass.ELECT_SWITCH:
        return f"ESW-{rng.randint(1, 9)}"
    if cls is ComponentClass.CLEARANCE_POINT:
        return f"CL-{rng.randint(1, 99)}"
    if cls is ComponentClass.CROSSING:
        return f"XNG-{rng.randint(1, 9)}"
    if cls is ComponentClass.CROSSING_LABEL:
        return f"RT {rng.randint(1, 99)}"
    return f"CP {_CP_WORDS[rng.randrange(len(_CP_WORDS))]}"
