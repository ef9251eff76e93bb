"""Exception types raised across the digitizer."""

from __future__ import annotations


class RtmError(Exception):
    """Base class for all digitizer errors."""


class MaskDimensionError(RtmError):
    """Two masks or rasters were combined despite differing dimensions."""


class DegenerateCropError(RtmError):
    """A crop box lies entirely outside the source raster."""


class UnknownClassLabelError(RtmError):
    """A detection file used a class label that is not recognized."""


class MalformedDetectionError(RtmError):
    """A detection record has invalid geometry, score, or structure."""


class InvalidSeedError(RtmError):
    """A region-growing seed does not sit on a set pixel."""


class OcrEngineError(RtmError):
    """An OCR engine failed to produce text for a crop."""

    def __init__(self, engine_id: str, message: str):
        super().__init__(f"engine {engine_id}: {message}")
        self.engine_id = engine_id


class DetectorUnavailableError(RtmError):
    """A configured detector backend cannot run in this environment."""


class LayoutError(RtmError):
    """A synthetic layout cannot be realized on the requested canvas."""


class PipelineError(RtmError):
    """A batch-level failure that aborts the whole run."""
