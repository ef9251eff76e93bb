"""Assignment of map components to milepost zones.

Milepost markers slice the image into vertical zones: each zone stretches
from the midpoint to its left neighbor's center to the midpoint to its
right neighbor's center, with the first and last zones running to the image
edges. A component belongs to the zone its box center falls in. Because
hand-drawn symbols drift horizontally, a configurable tolerance widens every
zone; a component near a boundary then picks up both neighboring mileposts
rather than gambling on one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .detections import ComponentClass, Detection, DetectionSet
from .ocr import parse_milepost_numbers
from .raster import BoundingBox


@dataclass(frozen=True)
class MilepostZone:
    """One milepost's slice of the image.

    values may be empty when the marker's text could not be read; the zone
    still takes part in the geometry so its neighbors keep their extents.
    """

    anchor: Detection
    values: tuple[float, ...]
    left: float
    right: float

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.right < self.left:
            raise ValueError(f"zone interval reversed: [{self.left}, {self.right}]")


@dataclass(frozen=True)
class AssociationConfig:
    tolerance_px: float = 0.0

    def __post_init__(self):
        if self.tolerance_px < 0:
            raise ValueError(f"tolerance_px must be >= 0, got {self.tolerance_px}")


@dataclass(frozen=True)
class ComponentRecord:
    """One output row: a non-milepost component with its text and mileposts."""

    image_id: str
    component_class: ComponentClass
    text: str
    mileposts: tuple[float, ...]
    box: BoundingBox
    score: float

    def __post_init__(self):
        if self.component_class is ComponentClass.MILEPOST:
            raise ValueError("component records describe non-milepost components")
        object.__setattr__(self, "mileposts", tuple(self.mileposts))


def build_zones(
    mileposts: Sequence[tuple[Detection, Sequence[float]]],
    image_width: int,
) -> list[MilepostZone]:
    """Partition [0, image_width] into zones at midpoints between markers.

    Markers are ordered by box center; zone boundaries sit halfway between
    consecutive centers. An empty marker list produces no zones.
    """
    if image_width < 1:
        raise ValueError("image_width must be positive")
    ordered = sorted(mileposts, key=lambda pair: pair[0].box.center_x)
    centers = [det.box.center_x for det, _ in ordered]
    zones = []
    for i, (det, values) in enumerate(ordered):
        left = 0.0 if i == 0 else (centers[i - 1] + centers[i]) / 2.0
        right = float(image_width) if i == len(ordered) - 1 else (centers[i] + centers[i + 1]) / 2.0
        zones.append(MilepostZone(anchor=det, values=tuple(values), left=left, right=right))
    return zones


def _zone_contains(zone: MilepostZone, cx: float, tolerance: float, first: bool) -> bool:
    # Half-open on the left so a center exactly on a shared boundary goes to
    # the left zone; the first zone keeps its closed left edge at 0.
    lo = zone.left - tolerance
    hi = zone.right + tolerance
    return (cx >= lo if first else cx > lo) and cx <= hi


def associate(component: Detection, zones: Sequence[MilepostZone], config: AssociationConfig) -> list[float]:
    """Milepost values for one component, deduplicated and ascending.

    With tolerance 0 the zones tile the image, so exactly one matches and a
    boundary-sitting center resolves to the left zone. Larger tolerances
    only ever add zones, never remove them.
    """
    cx = component.box.center_x
    values: set[float] = set()
    for i, zone in enumerate(zones):
        if _zone_contains(zone, cx, config.tolerance_px, first=i == 0):
            values.update(zone.values)
    return sorted(values)


def associate_all(
    detections: DetectionSet,
    texts: Mapping[Detection, str],
    config: AssociationConfig,
) -> list[ComponentRecord]:
    """Build one record per non-milepost detection.

    `texts` maps every detection to its class-filtered text; milepost texts
    are parsed into numbers to populate the zones. Output is sorted by
    (first milepost value, class label, x_min), with records that matched
    no milepost value at the end.
    """
    mileposts = []
    for det in detections:
        if det.component_class is ComponentClass.MILEPOST:
            mileposts.append((det, parse_milepost_numbers(texts.get(det, ""))))
    zones = build_zones(mileposts, detections.image_width)

    records = []
    for det in detections:
        if det.component_class is ComponentClass.MILEPOST:
            continue
        if det not in texts:
            raise ValueError(f"no text supplied for detection {det.component_class.label} at {det.box}")
        records.append(
            ComponentRecord(
                image_id=detections.image_id,
                component_class=det.component_class,
                text=texts[det],
                mileposts=tuple(associate(det, zones, config)),
                box=det.box,
                score=det.score,
            )
        )
    records.sort(
        key=lambda r: (
            (1,) if not r.mileposts else (0, r.mileposts[0]),
            r.component_class.label,
            r.box.x_min,
        )
    )
    return records


def scaled_default_tolerance(image_width: int, base_tolerance: float = 50.0, base_width: int = 4500) -> float:
    """Default zone tolerance: 50 px on a 4500 px wide map, scaled linearly."""
    return base_tolerance * image_width / base_width
