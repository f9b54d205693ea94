"""Exception types shared across the pipeline.

Every error raised by vitalcast derives from :class:`VitalcastError` so callers
can catch pipeline failures with a single except clause. The CLI maps these onto
exit codes (config -> 2, missing tool -> 3, stage failure -> 4).
"""

from __future__ import annotations


class VitalcastError(Exception):
    """Base class for all vitalcast errors."""


class ConfigError(VitalcastError):
    """Invalid pipeline configuration (unknown keys, bad values, missing files)."""


# --- video preparation -------------------------------------------------------

class MediaToolMissing(VitalcastError):
    """The external media tool could not be found or executed."""


class UnreadableVideo(VitalcastError):
    """The media tool could not extract metadata from the given file."""


class MediaToolFailure(VitalcastError):
    """The media tool exited nonzero or produced out-of-contract output."""


# --- raster operations -------------------------------------------------------

class RoiOutOfBounds(VitalcastError):
    """A region of interest extends past the frame it is applied to."""


class EmptyImage(VitalcastError):
    """An operation requiring pixels received an empty image."""


# --- OCR ----------------------------------------------------------------------

class EngineMissing(VitalcastError):
    """The external OCR engine could not be found or executed."""


class EngineFailure(VitalcastError):
    """The external OCR engine exited nonzero."""


class NoGlyphFound(VitalcastError):
    """Template matching was asked to classify an image with no ink."""


# --- series / analysis --------------------------------------------------------

class EmptySeries(VitalcastError):
    """An operation requiring samples received an empty series."""


class MissingColumn(VitalcastError):
    """An emotion export lacks a required column."""


class EmptyExport(VitalcastError):
    """An emotion export contains no parseable data rows."""


class ZeroVariance(VitalcastError):
    """Pearson correlation is undefined because one input is constant."""


class TooFewPairs(VitalcastError):
    """Pearson correlation needs at least two complete pairs."""


class UnknownFeature(VitalcastError):
    """A requested feature is not a column of the aligned dataset."""


class BadDuration(VitalcastError):
    """Synthetic fixture duration is below the supported minimum."""


class IoFailure(VitalcastError):
    """Reading or writing an artifact failed."""
