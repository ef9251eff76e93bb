"""Component classes, detections, and the sidecar file format.

A sidecar is a JSON file that carries the detector output for one map image:

    {"image_id": "...", "image_width": W, "image_height": H,
     "detections": [{"class": "signal", "box": [x0, y0, x1, y1], "score": 0.9}, ...]}

Box corners are inclusive pixel coordinates. Boxes that overshoot the image
bounds by at most 2 px are clamped; anything beyond that is rejected because
it usually means the boxes were produced for a different resolution.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import MalformedDetectionError, UnknownClassLabelError
from .raster import BoundingBox, Raster

CLAMP_SLACK_PX = 2


class ComponentClass(Enum):
    """The eight map component categories, in canonical report order."""

    MILEPOST = "milepost"
    CROSSING = "crossing"
    CROSSING_LABEL = "crossing_label"
    SIGNAL = "signal"
    SWITCH = "switch"
    CLEARANCE_POINT = "clearance_point"
    CP_NAME = "cp_name"
    ELECT_SWITCH = "elect_switch"

    @property
    def label(self) -> str:
        return self.value


# Legacy spellings seen in upstream label files, mapped to canonical names.
_LABEL_ALIASES = {
    "elect-switch": "elect_switch",
    "electric_switch": "elect_switch",
    "clearance-point": "clearance_point",
    "crossing-label": "crossing_label",
    "cp-name": "cp_name",
    "control_point_name": "cp_name",
    "mile_post": "milepost",
}

_BY_LABEL = {cls.value: cls for cls in ComponentClass}


def parse_class_label(label: str) -> ComponentClass:
    """Map a file label to a ComponentClass, accepting legacy spellings."""
    normalized = label.strip().lower().replace(" ", "_")
    normalized = _LABEL_ALIASES.get(normalized, normalized.replace("-", "_"))
    normalized = _LABEL_ALIASES.get(normalized, normalized)
    if normalized not in _BY_LABEL:
        raise UnknownClassLabelError(f"unknown component class label: {label!r}")
    return _BY_LABEL[normalized]


@dataclass(frozen=True)
class Detection:
    component_class: ComponentClass
    box: BoundingBox
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class DetectionSet:
    """All detections for one image, in file order."""

    image_id: str
    image_width: int
    image_height: int
    detections: tuple[Detection, ...]

    def __post_init__(self):
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image dimensions must be positive")
        object.__setattr__(self, "detections", tuple(self.detections))
        for det in self.detections:
            if det.box.x_max > self.image_width - 1 or det.box.y_max > self.image_height - 1:
                raise ValueError(f"box {det.box} exceeds image bounds {self.image_width}x{self.image_height}")

    def __iter__(self):
        return iter(self.detections)

    def __len__(self) -> int:
        return len(self.detections)


def _coerce_pixel(value, index: int, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedDetectionError(f"record {index}: {field} must be a number, got {value!r}")
    if isinstance(value, float) and not value.is_integer():
        raise MalformedDetectionError(f"record {index}: {field} must be an integer pixel value, got {value}")
    return int(value)


def _clamp_box(corners: list[int], width: int, height: int, index: int) -> BoundingBox:
    x0, y0, x1, y1 = corners
    if x1 < x0 or y1 < y0:
        raise MalformedDetectionError(f"record {index}: box corners out of order: {corners}")
    overshoot = max(-x0, -y0, x1 - (width - 1), y1 - (height - 1), 0)
    if overshoot > CLAMP_SLACK_PX:
        raise MalformedDetectionError(
            f"record {index}: box {corners} overshoots {width}x{height} bounds by {overshoot} px"
        )
    return BoundingBox(
        max(0, x0),
        max(0, y0),
        min(x1, width - 1),
        min(y1, height - 1),
    )


def _parse_record(raw: dict, width: int, height: int, index: int, require_score: bool) -> Detection:
    if not isinstance(raw, dict):
        raise MalformedDetectionError(f"record {index}: expected an object, got {type(raw).__name__}")
    try:
        component_class = parse_class_label(str(raw["class"]))
        corners_raw = raw["box"]
    except KeyError as exc:
        raise MalformedDetectionError(f"record {index}: missing field {exc}") from None
    if not isinstance(corners_raw, (list, tuple)) or len(corners_raw) != 4:
        raise MalformedDetectionError(f"record {index}: box must be [x_min, y_min, x_max, y_max]")
    names = ("x_min", "y_min", "x_max", "y_max")
    corners = [_coerce_pixel(v, index, n) for v, n in zip(corners_raw, names)]
    box = _clamp_box(corners, width, height, index)
    if require_score:
        try:
            score = float(raw["score"])
        except KeyError:
            raise MalformedDetectionError(f"record {index}: missing field 'score'") from None
        except (TypeError, ValueError):
            raise MalformedDetectionError(f"record {index}: score must be a number") from None
    else:
        score = float(raw.get("score", 1.0))
    if not 0.0 <= score <= 1.0:
        raise MalformedDetectionError(f"record {index}: score {score} outside [0, 1]")
    return Detection(component_class, box, score)


def _load_sidecar_dict(path: str | Path) -> dict:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedDetectionError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise MalformedDetectionError(f"{path}: top level must be an object")
    for field in ("image_id", "image_width", "image_height", "detections"):
        if field not in payload:
            raise MalformedDetectionError(f"{path}: missing field {field!r}")
    if not isinstance(payload["detections"], list):
        raise MalformedDetectionError(f"{path}: 'detections' must be a list")
    return payload


def load_detections(path: str | Path, require_score: bool = True) -> DetectionSet:
    """Read one sidecar file.

    Unknown class labels and malformed records raise, naming the offending
    label or record index so bad files are easy to fix.
    """
    payload = _load_sidecar_dict(path)
    width = int(payload["image_width"])
    height = int(payload["image_height"])
    detections = tuple(
        _parse_record(raw, width, height, i, require_score) for i, raw in enumerate(payload["detections"])
    )
    return DetectionSet(str(payload["image_id"]), width, height, detections)


def detection_set_to_dict(dset: DetectionSet, include_scores: bool = True) -> dict:
    records = []
    for det in dset:
        record = {
            "class": det.component_class.label,
            "box": [det.box.x_min, det.box.y_min, det.box.x_max, det.box.y_max],
        }
        if include_scores:
            record["score"] = det.score
        records.append(record)
    return {
        "image_id": dset.image_id,
        "image_width": dset.image_width,
        "image_height": dset.image_height,
        "detections": records,
    }


def save_detections(dset: DetectionSet, path: str | Path, include_scores: bool = True) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = detection_set_to_dict(dset, include_scores=include_scores)
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def filter_by_score(dset: DetectionSet, min_score: float) -> DetectionSet:
    """Keep detections with score >= min_score, preserving order."""
    kept = tuple(det for det in dset if det.score >= min_score)
    return DetectionSet(dset.image_id, dset.image_width, dset.image_height, kept)


class Detector(ABC):
    """Seam for plugging in a live detector instead of sidecar files.

    Implementations raise DetectorUnavailableError when their backend cannot
    run (missing weights, missing runtime); the pipeline then falls back to
    the sidecar next to the image.
    """

    concurrent_safe: bool = True

    @abstractmethod
    def detect(self, image: Raster, image_id: str) -> DetectionSet: ...
