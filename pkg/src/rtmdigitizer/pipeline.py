"""Batch digitization: images plus detection sidecars in, CSVs out.

Every image gets exactly one CSV named after its image id, even when no
component survives (header only). Images are independent work units, so a
failed image is logged and skipped without aborting the batch, and results
do not depend on processing order or parallelism.
"""

from __future__ import annotations

import csv
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .association import (
    AssociationConfig,
    ComponentRecord,
    associate_all,
    scaled_default_tolerance,
)
from .detections import (
    ComponentClass,
    Detection,
    DetectionSet,
    Detector,
    filter_by_score,
    load_detections,
)
from .distortion import border_connected_ink, clean_crop, glyphs_to_ocr_raster, write_debug_triptych
from .errors import DetectorUnavailableError, OcrEngineError, PipelineError, RtmError
from .evaluation import (
    ClassCounts,
    EvalReport,
    compute_report,
    load_ground_truth,
    match_detections,
)
from .ocr import (
    CharsetPolicy,
    OcrEngine,
    default_charset_policy,
    filter_text,
    load_charset_policy,
    make_engine,
    parse_milepost_numbers,
)
from .raster import crop, load_raster

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}

CSV_COLUMNS = (
    "image_id",
    "milepost",
    "component_class",
    "text",
    "x_min",
    "y_min",
    "x_max",
    "y_max",
    "score",
)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a digitization run needs. Field defaults are the CLI defaults."""

    input_dir: Path
    output_dir: Path
    debug_dir: Path | None = None
    tolerance_px: float | None = None  # None: 50 px at 4500 wide, scaled to the image
    binarize_threshold: int = 128
    erode_radius: int = 1
    box_padding_px: int = 0
    min_score: float = 0.0
    charset_config: Path | None = None
    ocr_engine: str = "template"
    jobs: int = 1
    emit_milepost_rows: bool = False

    def __post_init__(self):
        object.__setattr__(self, "input_dir", Path(self.input_dir))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.debug_dir is not None:
            object.__setattr__(self, "debug_dir", Path(self.debug_dir))
        if self.charset_config is not None:
            object.__setattr__(self, "charset_config", Path(self.charset_config))
        if self.tolerance_px is not None and self.tolerance_px < 0:
            raise ValueError("tolerance_px must be >= 0")
        if not 0 <= self.binarize_threshold <= 255:
            raise ValueError("binarize_threshold must be in [0, 255]")
        if not 0 <= self.erode_radius <= 3:
            raise ValueError("erode_radius must be in [0, 3]")
        if self.box_padding_px < 0:
            raise ValueError("box_padding_px must be >= 0")
        if not 0.0 <= self.min_score <= 1.0:
            raise ValueError("min_score must be in [0, 1]")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass
class RunSummary:
    images_processed: int = 0
    records_emitted: int = 0
    warnings: dict[str, tuple[str, ...]] = field(default_factory=dict)
    wall_time_s: float = 0.0


def _format_milepost(value: float) -> str:
    return f"{value:g}"


def _record_row(record: ComponentRecord) -> list[str]:
    return [
        record.image_id,
        ";".join(_format_milepost(v) for v in record.mileposts),
        record.component_class.label,
        record.text,
        str(record.box.x_min),
        str(record.box.y_min),
        str(record.box.x_max),
        str(record.box.y_max),
        str(record.score),
    ]


def emit_csv(
    records: list[ComponentRecord],
    path: str | Path,
    milepost_rows: list[tuple[str, Detection, str, list[float]]] = (),
) -> None:
    """Write one image's records as UTF-8, LF-terminated, quoted CSV.

    The header is always written, so an image without components still
    produces a parseable file. `milepost_rows` optionally appends the
    milepost anchors themselves as (image_id, detection, text, values).
    """
    ids = {r.image_id for r in records}
    if len(ids) > 1:
        raise ValueError(f"records span multiple images: {sorted(ids)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(_record_row(record))
        for image_id, det, text, values in milepost_rows:
            writer.writerow(
                [
                    image_id,
                    ";".join(_format_milepost(v) for v in values),
                    det.component_class.label,
                    text,
                    str(det.box.x_min),
                    str(det.box.y_min),
                    str(det.box.x_max),
                    str(det.box.y_max),
                    str(det.score),
                ]
            )


def _scan_images(input_dir: Path) -> list[Path]:
    try:
        entries = sorted(input_dir.iterdir())
    except OSError as exc:
        raise PipelineError(f"cannot read input directory {input_dir}: {exc}") from None
    images = []
    for path in entries:
        if not path.is_file():
            continue
        if path.suffix.lower() in IMAGE_SUFFIXES:
            images.append(path)
        elif path.suffix.lower() != ".json":
            logger.debug("ignoring %s: not a supported image type", path.name)
    return images


class _EngineGate:
    """Serializes recognize() calls for engines that are not thread-safe."""

    def __init__(self, engine: OcrEngine):
        self._engine = engine
        self._lock = threading.Lock() if not engine.concurrent_safe else None

    def recognize(self, image):
        if self._lock is None:
            return self._engine.recognize(image)
        with self._lock:
            return self._engine.recognize(image)


def _process_image(
    image_path: Path,
    config: PipelineConfig,
    engine: _EngineGate,
    policy: CharsetPolicy,
    detector: Detector | None,
) -> tuple[str, int, list[str]]:
    warnings: list[str] = []
    image = load_raster(image_path)
    dset = _detections_for(image_path, image, detector, warnings)
    if dset.image_width != image.width or dset.image_height != image.height:
        warnings.append(
            f"sidecar says {dset.image_width}x{dset.image_height} but image is {image.width}x{image.height}"
        )
    dset = filter_by_score(dset, config.min_score)

    texts: dict[Detection, str] = {}
    milepost_rows: list[tuple[str, Detection, str, list[float]]] = []
    for index, det in enumerate(dset):
        box = det.box.padded(config.box_padding_px)
        piece = crop(image, box)
        cleaned = clean_crop(
            piece,
            threshold=config.binarize_threshold,
            erode_radius=config.erode_radius,
            provenance=box,
        )
        if cleaned.removed_fraction == 1.0:
            warnings.append(
                f"{det.component_class.label} at {box}: cleanup removed all ink, no text to read"
            )
            raw = ""
        else:
            try:
                raw = engine.recognize(glyphs_to_ocr_raster(cleaned.glyphs)).raw_text
            except OcrEngineError as exc:
                warnings.append(f"{det.component_class.label} at {box}: {exc}")
                raw = ""
        text = filter_text(raw, det.component_class, policy)
        texts[det] = text
        if config.emit_milepost_rows and det.component_class is ComponentClass.MILEPOST:
            milepost_rows.append((dset.image_id, det, text, parse_milepost_numbers(text)))
        if config.debug_dir is not None:
            grown = border_connected_ink(piece, config.binarize_threshold)
            write_debug_triptych(config.debug_dir, dset.image_id, index, piece, grown, cleaned.glyphs)

    tolerance = (
        config.tolerance_px
        if config.tolerance_px is not None
        else scaled_default_tolerance(image.width)
    )
    records = associate_all(dset, texts, AssociationConfig(tolerance))
    unanchored = sum(1 for r in records if not r.mileposts)
    if unanchored:
        warnings.append(f"{unanchored} component(s) matched no milepost value")

    milepost_rows.sort(key=lambda row: (row[3][0] if row[3] else float("inf"), row[1].box.x_min))
    emit_csv(records, config.output_dir / f"{dset.image_id}.csv", milepost_rows)
    return dset.image_id, len(records) + len(milepost_rows), warnings


def _detections_for(
    image_path: Path,
    image,
    detector: Detector | None,
    warnings: list[str],
) -> DetectionSet:
    sidecar = image_path.with_suffix(".json")
    if detector is not None:
        try:
            return detector.detect(image, image_path.stem)
        except DetectorUnavailableError as exc:
            warnings.append(f"detector unavailable ({exc}); using sidecar")
    if not sidecar.exists():
        raise PipelineError(f"no detection sidecar at {sidecar}")
    return load_detections(sidecar)


def run(config: PipelineConfig, detector: Detector | None = None) -> RunSummary:
    """Digitize every image in the input directory.

    Returns a summary of work done; per-image failures appear in the
    summary's warnings under the image file name and do not stop the batch.
    """
    started = time.perf_counter()
    if not config.input_dir.is_dir():
        raise PipelineError(f"input directory {config.input_dir} does not exist or is not a directory")
    config.output_dir.mkdir(parents=True, exist_ok=True)

    engine = _EngineGate(make_engine(config.ocr_engine))
    policy = (
        load_charset_policy(config.charset_config)
        if config.charset_config is not None
        else default_charset_policy()
    )
    images = _scan_images(config.input_dir)

    summary = RunSummary()
    gate = threading.Lock() if detector is not None and not detector.concurrent_safe else None

    def work(path: Path) -> tuple[Path, str | None, int, list[str]]:
        try:
            if gate is None:
                image_id, emitted, warnings = _process_image(path, config, engine, policy, detector)
            else:
                with gate:
                    image_id, emitted, warnings = _process_image(path, config, engine, policy, detector)
            return path, image_id, emitted, warnings
        except Exception as exc:  # keep the batch alive, whatever one image does
            return path, None, 0, [f"failed: {exc}"]

    if config.jobs == 1:
        results = [work(p) for p in images]
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(work, images))

    for path, image_id, emitted, warnings in results:
        key = image_id if image_id is not None else path.name
        if image_id is not None:
            summary.images_processed += 1
            summary.records_emitted += emitted
        for message in warnings:
            logger.warning("%s: %s", key, message)
        if warnings:
            summary.warnings[key] = tuple(warnings)

    summary.wall_time_s = time.perf_counter() - started
    return summary


def evaluate(
    preds_dir: str | Path,
    gt_dir: str | Path,
    iou_threshold: float = 0.5,
    min_score: float = 0.5,
) -> EvalReport:
    """Score a directory of detection sidecars against ground-truth files.

    Both directories are matched by the image ids inside the files; any
    difference between the two id sets is fatal and reported in full.
    """
    preds = _load_sidecar_dir(Path(preds_dir), load_detections, "predictions")
    truths = _load_sidecar_dir(Path(gt_dir), load_ground_truth, "ground truth")
    missing = sorted(set(truths) - set(preds))
    extra = sorted(set(preds) - set(truths))
    if missing or extra:
        raise PipelineError(
            "prediction and ground-truth image ids differ: "
            f"missing from predictions {missing}, without ground truth {extra}"
        )
    totals: dict[ComponentClass, ClassCounts] = {}
    for image_id in sorted(preds):
        kept = filter_by_score(preds[image_id], min_score)
        for cls, counts in match_detections(kept, truths[image_id], iou_threshold).items():
            totals[cls] = totals.get(cls, ClassCounts()) + counts
    return compute_report(totals)


def _load_sidecar_dir(directory: Path, loader, kind: str) -> dict:
    if not directory.is_dir():
        raise PipelineError(f"{kind} directory {directory} does not exist or is not a directory")
    loaded = {}
    for path in sorted(directory.glob("*.json")):
        item = loader(path)
        if item.image_id in loaded:
            raise PipelineError(f"duplicate {kind} for image id {item.image_id!r} at {path}")
        loaded[item.image_id] = item
    if not loaded:
        raise PipelineError(f"no {kind} files (*.json) in {directory}")
    return loaded


def load_config_file(path: str | Path) -> dict:
    """Read a JSON config whose keys mirror the digitize CLI flags."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, dict):
        raise PipelineError(f"{path}: config must be a JSON object")
    known = {
        "input",
        "output",
        "debug",
        "tolerance",
        "threshold",
        "erode",
        "pad",
        "min_score",
        "charsets",
        "ocr",
        "jobs",
        "emit_milepost_rows",
    }
    unknown = set(payload) - known
    if unknown:
        raise PipelineError(f"{path}: unknown config keys {sorted(unknown)}")
    return payload
