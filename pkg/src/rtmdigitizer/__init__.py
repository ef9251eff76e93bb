"""Digitize railway technical map rasters into per-image component CSVs.

The library splits into small layers: `raster` for image and mask
primitives, `detections` for component boxes and their JSON sidecars,
`distortion` for border-connected stroke removal, `ocr` for template
matching and class-aware text filtering, `association` for milepost
zoning, `evaluation` for detector scoring, `synth` for ground-truthed
test images, and `pipeline`/`cli` to tie them into a batch tool.
"""

from .association import (
    AssociationConfig,
    ComponentRecord,
    MilepostZone,
    associate,
    associate_all,
    build_zones,
    scaled_default_tolerance,
)
from .detections import (
    ComponentClass,
    Detection,
    DetectionSet,
    Detector,
    filter_by_score,
    load_detections,
    parse_class_label,
    save_detections,
)
from .distortion import (
    CleanedCrop,
    SeedSet,
    border_seeds,
    clean_crop,
    glyphs_to_ocr_raster,
    region_grow,
)
from .errors import (
    DegenerateCropError,
    DetectorUnavailableError,
    InvalidSeedError,
    LayoutError,
    MalformedDetectionError,
    MaskDimensionError,
    OcrEngineError,
    PipelineError,
    RtmError,
    UnknownClassLabelError,
)
from .evaluation import (
    ClassCounts,
    ClassMetrics,
    EvalReport,
    GroundTruthSet,
    compute_report,
    iou,
    load_ground_truth,
    match_detections,
    report_to_csv,
    report_to_text,
)
from .ocr import (
    CharsetPolicy,
    ExternalCommandEngine,
    OcrEngine,
    OcrResult,
    TemplateEngine,
    default_charset_policy,
    filter_text,
    load_charset_policy,
    make_engine,
    parse_milepost_numbers,
)
from .pipeline import PipelineConfig, RunSummary, emit_csv, evaluate, run
from .raster import (
    BinaryMask,
    BoundingBox,
    Raster,
    binarize,
    crop,
    erode,
    invert,
    load_raster,
    resize_to,
    save_raster,
    xor,
)
from .synth import GroundTruthBundle, LayoutSpec, generate, random_layout, write_corpus

__version__ = "0.1.0"

__all__ = [
    "AssociationConfig",
    "BinaryMask",
    "BoundingBox",
    "CharsetPolicy",
    "ClassCounts",
    "ClassMetrics",
    "CleanedCrop",
    "ComponentClass",
    "ComponentRecord",
    "DegenerateCropError",
    "Detection",
    "DetectionSet",
    "Detector",
    "DetectorUnavailableError",
    "EvalReport",
    "ExternalCommandEngine",
    "GroundTruthBundle",
    "GroundTruthSet",
    "InvalidSeedError",
    "LayoutError",
    "LayoutSpec",
    "MalformedDetectionError",
    "MaskDimensionError",
    "MilepostZone",
    "OcrEngine",
    "OcrEngineError",
    "OcrResult",
    "PipelineConfig",
    "PipelineError",
    "Raster",
    "RtmError",
    "RunSummary",
    "SeedSet",
    "TemplateEngine",
    "UnknownClassLabelError",
    "associate",
    "associate_all",
    "binarize",
    "border_seeds",
    "build_zones",
    "clean_crop",
    "compute_report",
    "crop",
    "default_charset_policy",
    "emit_csv",
    "erode",
    "evaluate",
    "filter_by_score",
    "filter_text",
    "generate",
    "glyphs_to_ocr_raster",
    "invert",
    "iou",
    "load_charset_policy",
    "load_detections",
    "load_ground_truth",
    "load_raster",
    "make_engine",
    "match_detections",
    "parse_class_label",
    "parse_milepost_numbers",
    "random_layout",
    "region_grow",
    "report_to_csv",
    "report_to_text",
    "resize_to",
    "run",
    "save_detections",
    "save_raster",
    "scaled_default_tolerance",
    "write_corpus",
    "xor",
]
