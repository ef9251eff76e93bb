"""Detection quality metrics: IoU matching, per-class counts, macro means.

Boxes are inclusive pixel rectangles, so a box from (0, 0) to (9, 9) covers
100 pixels. Matching is greedy in descending score order against the
same-class ground truth, each truth box usable once. Precision and recall
are point values at the configured IoU and score thresholds; macro means
average over all eight component classes, counting absent classes as zero.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .detections import ComponentClass, DetectionSet, _load_sidecar_dict, _parse_record
from .raster import BoundingBox

DEFAULT_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class GroundTruthSet:
    """Labeled boxes for one image."""

    image_id: str
    image_width: int
    image_height: int
    boxes: tuple[tuple[ComponentClass, BoundingBox], ...]

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        for _, box in self.boxes:
            if box.x_max > self.image_width - 1 or box.y_max > self.image_height - 1:
                raise ValueError(f"ground truth box {box} exceeds {self.image_width}x{self.image_height}")

    def __len__(self) -> int:
        return len(self.boxes)


def load_ground_truth(path: str | Path) -> GroundTruthSet:
    """Read a ground-truth file (sidecar layout, scores optional/ignored)."""
    payload = _load_sidecar_dict(path)
    width = int(payload["image_width"])
    height = int(payload["image_height"])
    boxes = []
    for i, raw in enumerate(payload["detections"]):
        det = _parse_record(raw, width, height, i, require_score=False)
        boxes.append((det.component_class, det.box))
    return GroundTruthSet(str(payload["image_id"]), width, height, tuple(boxes))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two inclusive pixel rectangles."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min) + 1
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min) + 1
    if ix <= 0 or iy <= 0:
        return 0.0
    intersection = ix * iy
    return intersection / (a.area + b.area - intersection)


@dataclass(frozen=True)
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "ClassCounts") -> "ClassCounts":
        return ClassCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def match_detections(
    preds: DetectionSet,
    gt: GroundTruthSet,
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> dict[ComponentClass, ClassCounts]:
    """Greedy per-class matching of predictions to ground truth.

    Predictions are taken in descending score order (file order breaks
    score ties); each claims the unmatched same-class truth box with the
    highest IoU at or above the threshold, earlier truth index winning IoU
    ties. Per class, tp + fn equals the truth count and tp + fp the
    prediction count.
    """
    if preds.image_id != gt.image_id:
        raise ValueError(f"image mismatch: predictions {preds.image_id!r} vs truth {gt.image_id!r}")
    counts: dict[ComponentClass, ClassCounts] = {}
    for cls in ComponentClass:
        cls_preds = [d for d in preds if d.component_class is cls]
        cls_gt = [box for c, box in gt.boxes if c is cls]
        order = sorted(range(len(cls_preds)), key=lambda i: (-cls_preds[i].score, i))
        taken = [False] * len(cls_gt)
        tp = 0
        for i in order:
            best_j = -1
            best_iou = 0.0
            for j, gt_box in enumerate(cls_gt):
                if taken[j]:
                    continue
                overlap = iou(cls_preds[i].box, gt_box)
                if overlap >= iou_threshold and overlap > best_iou:
                    best_iou = overlap
                    best_j = j
            if best_j >= 0:
                taken[best_j] = True
                tp += 1
        counts[cls] = ClassCounts(tp=tp, fp=len(cls_preds) - tp, fn=len(cls_gt) - tp)
    return counts


@dataclass(frozen=True)
class ClassMetrics:
    component_class: ComponentClass
    tp: int
    fp: int
    fn: int
    ap: float
    ar: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    """Metrics for all eight classes plus their unweighted macro means."""

    per_class: tuple[ClassMetrics, ...]
    map: float
    mar: float
    maf1: float


def compute_report(counts: dict[ComponentClass, ClassCounts]) -> EvalReport:
    """Point precision/recall/F1 per class and macro means over all classes.

    ap = tp / (tp + fp), ar = tp / (tp + fn), f1 their harmonic mean; each
    is 0 when its denominator is 0. Classes absent from `counts` contribute
    zero rows. Values stay unrounded; rounding is display-only.
    """
    metrics = []
    for cls in ComponentClass:
        c = counts.get(cls, ClassCounts())
        ap = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
        ar = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
        f1 = 2 * ap * ar / (ap + ar) if ap + ar else 0.0
        metrics.append(ClassMetrics(cls, c.tp, c.fp, c.fn, ap, ar, f1))
    n = len(metrics)
    return EvalReport(
        per_class=tuple(metrics),
        map=sum(m.ap for m in metrics) / n,
        mar=sum(m.ar for m in metrics) / n,
        maf1=sum(m.f1 for m in metrics) / n,
    )


def report_to_text(report: EvalReport, iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> str:
    """Aligned per-class table plus a macro summary line."""
    header = f"{'@IoU_' + format(iou_threshold, 'g'):<18}{'TP':>6}{'FP':>6}{'FN':>6}{'AP':>8}{'AR':>8}{'F1':>8}"
    lines = [header]
    for m in report.per_class:
        lines.append(
            f"{m.component_class.label:<18}{m.tp:>6}{m.fp:>6}{m.fn:>6}"
            f"{m.ap:>8.2f}{m.ar:>8.2f}{m.f1:>8.2f}"
        )
    lines.append(f"macro  mAP={report.map:.4f}  mAR={report.mar:.4f}  mAF1={report.maf1:.4f}")
    return "\n".join(lines)


def report_to_csv(report: EvalReport) -> str:
    """CSV rendering: one row per class, then a macro row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "tp", "fp", "fn", "ap", "ar", "f1"])
    for m in report.per_class:
        writer.writerow(
            [m.component_class.label, m.tp, m.fp, m.fn, f"{m.ap:.2f}", f"{m.ar:.2f}", f"{m.f1:.2f}"]
        )
    writer.writerow(["macro", "", "", "", f"{report.map:.4f}", f"{report.mar:.4f}", f"{report.maf1:.4f}"])
    return buf.getvalue()
