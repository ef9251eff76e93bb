"""Acceptance gate for the whole package.

Each test here is one numbered criterion; conftest.py prints a PASS/FAIL
line per criterion at the end of the run. Criterion 7 is the explicit
statement that real-corpus detector training, its measured detection
quality, and absolute OCR accuracy on production CAD renders are out of
scope at desk scale; criteria 1 through 6 are the stand-ins.

Criterion summary:
  1 published-table reconciliation of the metric formulas
  2 distortion cleanup equals an independent connected-component oracle
  3 end-to-end synthetic round trip recovers every record exactly
  4 association properties: tolerance monotonicity + nearest-anchor oracle
  5 matching conservation + greedy equals maximum matching
  6 byte-identical outputs regardless of parallelism
"""

from __future__ import annotations

import csv
import io
import random
import time

import numpy as np
from scipy import ndimage

from rtmdigitizer.association import AssociationConfig, associate, build_zones
from rtmdigitizer.detections import ComponentClass, Detection, DetectionSet
from rtmdigitizer.distortion import clean_crop
from rtmdigitizer.evaluation import (
    ClassCounts,
    GroundTruthSet,
    compute_report,
    iou,
    match_detections,
)
from rtmdigitizer.pipeline import PipelineConfig, run
from rtmdigitizer.raster import BinaryMask, BoundingBox, Raster
from rtmdigitizer.synth import generate, random_layout, write_corpus

# Per-class (tp, fp, fn) operating points with their published 2-dp
# ratios. The cp_name F1 is asserted at the formula's value 0.92
# (12/13 = 0.923); the macro F1 target below only reconciles with that.
_REFERENCE_ROWS = [
    (ComponentClass.MILEPOST, 77, 11, 0, "0.88", "1.00", "0.93"),
    (ComponentClass.CROSSING, 6, 3, 0, "0.67", "1.00", "0.80"),
    (ComponentClass.CROSSING_LABEL, 6, 2, 0, "0.75", "1.00", "0.86"),
    (ComponentClass.SIGNAL, 45, 14, 6, "0.76", "0.88", "0.82"),
    (ComponentClass.SWITCH, 42, 12, 1, "0.78", "0.98", "0.87"),
    (ComponentClass.CLEARANCE_POINT, 48, 11, 0, "0.81", "1.00", "0.90"),
    (ComponentClass.CP_NAME, 6, 1, 0, "0.86", "1.00", "0.92"),
    (ComponentClass.ELECT_SWITCH, 0, 1, 1, "0.00", "0.00", "0.00"),
]

_MACRO_TARGETS = {"map": 0.6878, "mar": 0.8573, "maf1": 0.7618}
_MACRO_TOLERANCE = 0.005


def test_criterion_1_reference_table_reconciliation():
    started = time.perf_counter()
    counts = {cls: ClassCounts(tp, fp, fn) for cls, tp, fp, fn, *_ in _REFERENCE_ROWS}
    report = compute_report(counts)
    by_class = {m.component_class: m for m in report.per_class}
    for cls, tp, fp, fn, ap, ar, f1 in _REFERENCE_ROWS:
        metrics = by_class[cls]
        assert (metrics.tp, metrics.fp, metrics.fn) == (tp, fp, fn)
        assert f"{metrics.ap:.2f}" == ap, f"{cls.label} precision"
        assert f"{metrics.ar:.2f}" == ar, f"{cls.label} recall"
        assert f"{metrics.f1:.2f}" == f1, f"{cls.label} f1"
    assert abs(report.map - _MACRO_TARGETS["map"]) <= _MACRO_TOLERANCE
    assert abs(report.mar - _MACRO_TARGETS["mar"]) <= _MACRO_TOLERANCE
    assert abs(report.maf1 - _MACRO_TARGETS["maf1"]) <= _MACRO_TOLERANCE
    assert time.perf_counter() - started < 1.0


def _oracle_glyphs(ink: np.ndarray, connectivity: int) -> np.ndarray:
    """Independent oracle: label components, drop those touching a border."""
    structure = np.ones((3, 3), dtype=bool) if connectivity == 8 else None
    labels, _ = ndimage.label(ink, structure=structure)
    border = np.unique(
        np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    )
    border = border[border != 0]
    return ink & ~np.isin(labels, border)


def test_criterion_2_distortion_cleanup_equals_component_oracle():
    started = time.perf_counter()
    rng = random.Random(2024)
    checked = 0
    for _ in range(1000):
        h = rng.randint(1, 64)
        w = rng.randint(1, 64)
        density = rng.choice([0.05, 0.2, 0.4, 0.6, 0.9])
        ink = np.random.default_rng(rng.getrandbits(32)).random((h, w)) < density
        img = Raster(np.where(ink, 0, 255).astype(np.uint8))
        for connectivity in (4, 8):
            got = clean_crop(img, erode_radius=0, connectivity=connectivity).glyphs
            want = _oracle_glyphs(ink, connectivity)
            assert got == BinaryMask(want), f"{h}x{w} mask, {connectivity}-connectivity"
        checked += 1
    assert checked >= 1000
    assert time.perf_counter() - started < 30.0


def _expected_csv_bytes(bundle) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ("image_id", "milepost", "component_class", "text", "x_min", "y_min", "x_max", "y_max", "score")
    )
    for r in bundle.expected_records:
        writer.writerow(
            [
                r.image_id,
                ";".join(f"{v:g}" for v in r.mileposts),
                r.component_class.label,
                r.text,
                str(r.box.x_min),
                str(r.box.y_min),
                str(r.box.x_max),
                str(r.box.y_max),
                str(r.score),
            ]
        )
    return buf.getvalue().encode("utf-8")


def test_criterion_3_synthetic_round_trip_recovers_every_record(tmp_path):
    started = time.perf_counter()
    seeds = 50
    input_dir = tmp_path / "corpus"
    bundles = write_corpus(input_dir, seed=1000, count=seeds)
    out = tmp_path / "csv"
    summary = run(PipelineConfig(input_dir, out, tolerance_px=0))
    assert summary.images_processed == seeds
    assert not summary.warnings

    for bundle in bundles:
        image_id = bundle.detections.image_id
        produced = (out / f"{image_id}.csv").read_bytes()
        assert produced == _expected_csv_bytes(bundle), f"{image_id} diverged"
    assert time.perf_counter() - started < 120.0


def _random_zone_layout(rng: random.Random):
    width = rng.randint(200, 2000)
    count = rng.randint(1, 6)
    centers = sorted(rng.sample(range(15, width - 15), count))
    anchors = []
    for i, cx in enumerate(centers):
        box = BoundingBox(cx - 5, 10, cx + 5, 30)
        det = Detection(ComponentClass.MILEPOST, box, 1.0)
        anchors.append((det, [float(i)]))
    return width, centers, build_zones(anchors, width)


def test_criterion_4_association_monotonicity_and_nearest_anchor_oracle():
    started = time.perf_counter()
    rng = random.Random(4040)
    for _ in range(10_000):
        width, centers, zones = _random_zone_layout(rng)
        cx = rng.randint(8, width - 8)
        comp = Detection(ComponentClass.SIGNAL, BoundingBox(cx - 7, 50, cx + 7, 80), 1.0)

        t1 = rng.uniform(0, width / 4)
        t2 = t1 + rng.uniform(0, width / 4)
        r1 = associate(comp, zones, AssociationConfig(t1))
        r2 = associate(comp, zones, AssociationConfig(t2))
        assert set(r1) <= set(r2), "tolerance expansion lost a zone"

        got = associate(comp, zones, AssociationConfig(0))
        nearest = min(range(len(centers)), key=lambda i: (abs(centers[i] - cx), i))
        assert got == [float(nearest)], "zero-tolerance result is not the nearest anchor"
    assert time.perf_counter() - started < 30.0


def _max_matching(edges: dict[int, list[int]], n_preds: int) -> int:
    """Brute-force maximum bipartite matching size (instances are tiny)."""
    best = 0

    def extend(i: int, used: frozenset[int], size: int):
        nonlocal best
        best = max(best, size)
        if i == n_preds:
            return
        extend(i + 1, used, size)
        for j in edges.get(i, ()):
            if j not in used:
                extend(i + 1, used | {j}, size + 1)

    extend(0, frozenset(), 0)
    return best


def _disjoint_boxes(rng: random.Random, count: int) -> list[BoundingBox]:
    """Non-overlapping boxes, the way same-class truth annotations appear."""
    boxes = []
    x = rng.randint(0, 8)
    for _ in range(count):
        w = rng.randint(8, 20)
        h = rng.randint(8, 20)
        y = rng.randint(0, 30)
        boxes.append(BoundingBox(x, y, x + w - 1, y + h - 1))
        x += w + rng.randint(2, 10)
    return boxes


def test_criterion_5_matching_conservation_and_greedy_optimality():
    rng = random.Random(5050)
    instances = 0
    while instances < 300:
        gt_boxes = _disjoint_boxes(rng, rng.randint(1, 6))
        preds = []
        for _ in range(rng.randint(1, 6)):
            anchor = rng.choice(gt_boxes)
            dx = rng.randint(-6, 6)
            dy = rng.randint(-6, 6)
            grow = rng.randint(0, 4)
            box = BoundingBox(
                max(0, anchor.x_min + dx),
                max(0, anchor.y_min + dy),
                anchor.x_max + dx + grow,
                anchor.y_max + dy + grow,
            )
            preds.append(Detection(ComponentClass.SIGNAL, box, round(rng.random(), 6)))

        overlaps = [
            iou(p.box, g)
            for p in preds
            for g in gt_boxes
            if iou(p.box, g) >= 0.5
        ]
        if len(set(overlaps)) != len(overlaps):
            continue  # qualifying-IoU tie: excluded by construction
        if len({p.score for p in preds}) != len(preds):
            continue

        span = max(max(b.x_max for b in gt_boxes), max(p.box.x_max for p in preds)) + 1
        height = max(max(b.y_max for b in gt_boxes), max(p.box.y_max for p in preds)) + 1
        dset = DetectionSet("m", span, height, tuple(preds))
        gt = GroundTruthSet("m", span, height, tuple((ComponentClass.SIGNAL, b) for b in gt_boxes))
        counts = match_detections(dset, gt, 0.5)[ComponentClass.SIGNAL]

        assert counts.tp + counts.fp == len(preds)
        assert counts.tp + counts.fn == len(gt_boxes)

        edges = {
            i: [j for j, g in enumerate(gt_boxes) if iou(p.box, g) >= 0.5]
            for i, p in enumerate(preds)
        }
        assert counts.tp == _max_matching(edges, len(preds)), "greedy missed a maximum matching"
        instances += 1


def test_criterion_6_output_is_byte_identical_across_parallelism(tmp_path):
    corpus = tmp_path / "corpus"
    write_corpus(corpus, seed=6000, count=8)
    runs = {}
    for jobs in (1, 4):
        out = tmp_path / f"out_jobs{jobs}"
        summary = run(PipelineConfig(corpus, out, tolerance_px=0, jobs=jobs))
        assert summary.images_processed == 8
        runs[jobs] = {p.name: p.read_bytes() for p in out.glob("*.csv")}
    assert runs[1].keys() == runs[4].keys()
    assert len(runs[1]) == 8
    for name in runs[1]:
        assert runs[1][name] == runs[4][name], f"{name} differs between serial and parallel runs"

    # a straight rerun at the same parallelism is also bit-stable
    again = tmp_path / "out_again"
    run(PipelineConfig(corpus, again, tolerance_px=0, jobs=4))
    for p in again.glob("*.csv"):
        assert p.read_bytes() == runs[4][p.name]


def test_criterion_3_full_scale_smoke(tmp_path):
    """One map at production resolution travels the same path unchanged."""
    started = time.perf_counter()
    bundle = generate(random_layout(7, width=4500, height=2400))
    input_dir = tmp_path / "in"
    input_dir.mkdir()
    from rtmdigitizer.detections import save_detections
    from rtmdigitizer.raster import save_raster

    image_id = bundle.detections.image_id
    save_raster(bundle.image, input_dir / f"{image_id}.png")
    save_detections(bundle.detections, input_dir / f"{image_id}.json")
    out = tmp_path / "csv"
    summary = run(PipelineConfig(input_dir, out, tolerance_px=0))
    assert summary.images_processed == 1
    assert not summary.warnings
    assert (out / f"{image_id}.csv").read_bytes() == _expected_csv_bytes(bundle)
    assert time.perf_counter() - started < 120.0
