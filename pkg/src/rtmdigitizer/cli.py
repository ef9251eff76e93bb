"""Command line entry point: digitize, evaluate, and synth subcommands."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import RtmError
from .evaluation import report_to_csv, report_to_text
from .pipeline import PipelineConfig, evaluate, load_config_file, run
from .synth import write_corpus


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtmdigitizer",
        description="Digitize railway technical map images into per-image component CSVs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dig = sub.add_parser("digitize", help="read images + detection sidecars, write CSVs")
    dig.add_argument("--input", type=Path, help="directory of images with .json sidecars")
    dig.add_argument("--output", type=Path, help="directory for per-image CSVs")
    dig.add_argument("--debug", type=Path, help="write per-crop cleanup images here")
    dig.add_argument("--tolerance", type=float, help="zone tolerance in px (default scales with width)")
    dig.add_argument("--threshold", type=int, help="binarization threshold, default 128")
    dig.add_argument("--erode", type=int, help="glyph erosion radius 0..3, default 1")
    dig.add_argument("--pad", type=int, help="pad detection boxes by this many px before cropping")
    dig.add_argument("--min-score", type=float, help="drop detections scored below this, default 0")
    dig.add_argument("--charsets", type=Path, help="JSON file overriding per-class character sets")
    dig.add_argument("--ocr", help='OCR engine: "template" (default) or "cmd:<command>"')
    dig.add_argument("--jobs", type=int, help="images processed in parallel, default 1")
    dig.add_argument(
        "--emit-milepost-rows",
        action="store_true",
        default=None,
        help="also write the milepost anchors themselves as CSV rows",
    )
    dig.add_argument("--config", type=Path, help="JSON config file; explicit flags win over it")

    ev = sub.add_parser("evaluate", help="score detection sidecars against ground truth")
    ev.add_argument("--preds", type=Path, required=True, help="directory of scored detection files")
    ev.add_argument("--gt", type=Path, required=True, help="directory of ground-truth files")
    ev.add_argument("--iou", type=float, default=0.5, help="match threshold, default 0.5")
    ev.add_argument("--min-score", type=float, default=0.5, help="score cutoff, default 0.5")
    ev.add_argument("--csv", type=Path, help="also write the table as CSV here")

    syn = sub.add_parser("synth", help="generate synthetic maps with sidecars and ground truth")
    syn.add_argument("--seed", type=int, required=True, help="first seed; images use seed..seed+count-1")
    syn.add_argument("--count", type=int, default=1, help="how many images, default 1")
    syn.add_argument("--out", type=Path, required=True, help="output directory")
    syn.add_argument("--hard", action="store_true", help="run strokes through the label text")

    return parser


_CONFIG_KEYS = (
    ("input", "input"),
    ("output", "output"),
    ("debug", "debug"),
    ("tolerance", "tolerance"),
    ("threshold", "threshold"),
    ("erode", "erode"),
    ("pad", "pad"),
    ("min_score", "min_score"),
    ("charsets", "charsets"),
    ("ocr", "ocr"),
    ("jobs", "jobs"),
    ("emit_milepost_rows", "emit_milepost_rows"),
)


def _digitize_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> PipelineConfig:
    merged: dict = {}
    if args.config is not None:
        merged.update(load_config_file(args.config))
    for attr, key in _CONFIG_KEYS:
        value = getattr(args, attr)
        if value is not None:
            merged[key] = value
    if merged.get("input") is None or merged.get("output") is None:
        parser.error("digitize needs --input and --output (flags or config file)")
    return PipelineConfig(
        input_dir=Path(merged["input"]),
        output_dir=Path(merged["output"]),
        debug_dir=Path(merged["debug"]) if merged.get("debug") is not None else None,
        tolerance_px=merged.get("tolerance"),
        binarize_threshold=merged.get("threshold", 128),
        erode_radius=merged.get("erode", 1),
        box_padding_px=merged.get("pad", 0),
        min_score=merged.get("min_score", 0.0),
        charset_config=Path(merged["charsets"]) if merged.get("charsets") is not None else None,
        ocr_engine=merged.get("ocr", "template"),
        jobs=merged.get("jobs", 1),
        emit_milepost_rows=bool(merged.get("emit_milepost_rows", False)),
    )


def _cmd_digitize(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _digitize_config(args, parser)
    summary = run(config)
    print(
        f"{summary.images_processed} image(s) digitized, "
        f"{summary.records_emitted} record(s), "
        f"{sum(len(v) for v in summary.warnings.values())} warning(s), "
        f"{summary.wall_time_s:.1f}s"
    )
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    report = evaluate(args.preds, args.gt, iou_threshold=args.iou, min_score=args.min_score)
    print(report_to_text(report, args.iou))
    if args.csv is not None:
        args.csv.parent.mkdir(parents=True, exist_ok=True)
        args.csv.write_text(report_to_csv(report), encoding="utf-8")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.count < 1:
        raise RtmError("--count must be >= 1")
    bundles = write_corpus(args.out, args.seed, args.count, hard=args.hard)
    print(f"wrote {len(bundles)} image(s) to {args.out} (ground truth in {args.out / 'gt'})")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "digitize":
            return _cmd_digitize(args, parser)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        return _cmd_synth(args)
    except RtmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
