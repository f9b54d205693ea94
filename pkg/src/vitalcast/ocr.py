"""Recognition of preprocessed metric readouts into validated numeric readings.

Two recognizer backends sit behind one contract: an external OCR engine
invoked as a subprocess (Tesseract-compatible CLI) and a hermetic template
matcher built on the shipped digit font. The template backend needs no
external tools, which keeps the whole pipeline testable offline.
"""

from __future__ import annotations

import csv
import os
import re
import shutil
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EngineFailure, EngineMissing, NoGlyphFound
from .glyphs import digit_templates
from .image_ops import (
    BinaryImage,
    GrayImage,
    PreprocessParams,
    RoiSpec,
    binarize,
    load_gray,
    preprocess_roi,
    resize,
    save_png,
)
from .series_clean import TelemetrySeries

ENGINE_ENV_VAR = "VITALCAST_OCR_ENGINE"
_DIGITS_RE = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class ChannelRange:
    """Inclusive plausibility bounds for one channel's values."""

    channel: str
    min: int
    max: int

    def __post_init__(self) -> None:
        if self.min > self.max:
            raise ValueError(f"range for {self.channel!r}: min {self.min} > max {self.max}")

    def contains(self, value: int) -> bool:
        return self.min <= value <= self.max


DEFAULT_RANGES = {
    "heart_rate": ChannelRange("heart_rate", 25, 250),
    "power": ChannelRange("power", 0, 2500),
}


@dataclass(frozen=True)
class Reading:
    """One recognition result; ``value`` is None when the frame yields a gap."""

    t_seconds: int
    channel: str
    raw_text: str
    value: int | None
    confidence: float


@dataclass
class RecognizerSpec:
    """Which backend recognizes readouts and how it is configured.

    ``kind`` is "template" or "external". The external engine path resolves in
    order: this field, the VITALCAST_OCR_ENGINE environment variable, then a
    ``tesseract`` binary on PATH. ``psm`` is the engine's page segmentation
    mode (7 = single text line). ``min_ink_fraction`` makes the template
    backend discard glyph runs whose ink area falls below that fraction of the
    largest run (a noise gate against speck artifacts; 0 keeps every run).
    """

    kind: str = "template"
    engine_path: str | None = None
    char_whitelist: str = "0123456789"
    psm: int = 7
    templates: dict[str, np.ndarray] | None = None
    min_ink_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in ("template", "external"):
            raise ValueError(f"unknown recognizer kind {self.kind!r}")
        if not 0.0 <= self.min_ink_fraction < 1.0:
            raise ValueError(f"min_ink_fraction must lie in [0, 1), got {self.min_ink_fraction}")


def resolve_engine(spec: RecognizerSpec) -> str:
    """Locate the external engine binary or raise :class:`EngineMissing`."""
    candidate = spec.engine_path or os.environ.get(ENGINE_ENV_VAR) or shutil.which("tesseract")
    if not candidate or not Path(candidate).exists():
        raise EngineMissing(
            "no OCR engine found; set recognizer.engine_path or VITALCAST_OCR_ENGINE"
        )
    return str(candidate)


def engine_version(spec: RecognizerSpec) -> str:
    """First line of the engine's --version output (for the run manifest)."""
    engine = resolve_engine(spec)
    proc = subprocess.run([engine, "--version"], capture_output=True, text=True)
    for stream in (proc.stdout, proc.stderr):
        for line in stream.splitlines():
            if line.strip():
                return line.strip()
    return "unknown"


# --- template backend ------------------------------------------------------------

def segment_glyphs(binary: BinaryImage) -> list[BinaryImage]:
    """Split a binary readout into glyphs by runs of ink-bearing columns.

    Columns containing any foreground pixel form a run; each run is trimmed to
    its ink rows. Runs are returned left to right.
    """
    ink = binary.pixels == 255
    columns = ink.any(axis=0)
    glyphs: list[BinaryImage] = []
    start: int | None = None
    for x, has_ink in enumerate(list(columns) + [False]):
        if has_ink and start is None:
            start = x
        elif not has_ink and start is not None:
            segment = ink[:, start:x]
            rows = segment.any(axis=1)
            y0 = int(np.argmax(rows))
            y1 = len(rows) - int(np.argmax(rows[::-1]))
            glyphs.append(BinaryImage(np.where(segment[y0:y1], 255, 0).astype(np.uint8)))
            start = None
    return glyphs


def template_match_digit(
    glyph: BinaryImage, templates: dict[str, np.ndarray] | None = None
) -> tuple[str, float]:
    """Best-matching digit for one glyph by normalized pixel agreement.

    The glyph is resampled to each template's dimensions and scored as the
    fraction of agreeing pixels; the highest score wins, ties resolving to the
    earliest template in mapping order.

    Raises:
        NoGlyphFound: the glyph contains no ink.
    """
    if templates is None:
        templates = digit_templates()
    if not (glyph.pixels == 255).any():
        raise NoGlyphFound("glyph image contains no foreground pixels")
    resampled_by_shape: dict[tuple[int, int], np.ndarray] = {}
    best_digit, best_score = "", -1.0
    for digit, template in templates.items():
        shape = template.shape
        if shape not in resampled_by_shape:
            resampled_by_shape[shape] = resize(glyph.to_gray(), w=shape[1], h=shape[0]).pixels > 127
        score = float((resampled_by_shape[shape] == template).mean())
        if score > best_score:
            best_digit, best_score = digit, score
    return best_digit, best_score


def _recognize_template(img: GrayImage, spec: RecognizerSpec) -> tuple[str, float]:
    binary = binarize(img, method="otsu")
    glyphs = segment_glyphs(binary)
    if glyphs and spec.min_ink_fraction > 0:
        ink_areas = [int((g.pixels == 255).sum()) for g in glyphs]
        cutoff = spec.min_ink_fraction * max(ink_areas)
        glyphs = [g for g, area in zip(glyphs, ink_areas) if area >= cutoff]
    if not glyphs:
        return "", 0.0
    templates = spec.templates if spec.templates is not None else digit_templates()
    digits: list[str] = []
    scores: list[float] = []
    for glyph in glyphs:
        digit, score = template_match_digit(glyph, templates)
        digits.append(digit)
        scores.append(score)
    return "".join(digits), float(np.mean(scores))


# --- external backend ------------------------------------------------------------

def _recognize_external(img: GrayImage, spec: RecognizerSpec, engine: str) -> tuple[str, float]:
    """Run the engine on a temp PNG; parse TSV stdout for text and confidence.

    Words on the recognized line are concatenated without separators (the
    whitelist admits only digits). When the output is not parseable TSV the
    whole stripped stdout is taken as the line with confidence 0.
    """
    with tempfile.TemporaryDirectory(prefix="vitalcast_ocr_") as tmp:
        png = Path(tmp) / "roi.png"
        save_png(img, png)
        cmd = [
            engine,
            str(png),
            "stdout",
            "--psm",
            str(spec.psm),
            "-c",
            f"tessedit_char_whitelist={spec.char_whitelist}",
            "tsv",
        ]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True)
        except OSError as exc:
            raise EngineMissing(f"cannot execute OCR engine {engine!r}: {exc}") from exc
    if proc.returncode != 0:
        raise EngineFailure(f"engine exited {proc.returncode}: {proc.stderr.strip()[:500]}")
    words: list[str] = []
    confidences: list[float] = []
    for line in proc.stdout.splitlines():
        fields = line.split("\t")
        if len(fields) < 12 or fields[0] == "level":
            continue
        try:
            level = int(fields[0])
            conf = float(fields[10])
        except ValueError:
            continue
        text = fields[11].strip()
        if level == 5 and text:
            words.append(text)
            confidences.append(conf)
    if words:
        return "".join(words), float(np.clip(np.mean(confidences) / 100.0, 0.0, 1.0))
    if "\t" in proc.stdout:
        return "", 0.0  # valid TSV, no recognized words
    return proc.stdout.strip(), 0.0


def recognize(img: GrayImage, spec: RecognizerSpec) -> tuple[str, float]:
    """Turn one preprocessed readout image into (raw_text, confidence).

    Confidence lies in [0, 1]: the template backend reports the mean glyph
    agreement score, the external backend the engine's mean word confidence
    scaled by 1/100. A blank image yields ("", 0.0).
    """
    if img.is_empty:
        return "", 0.0
    if spec.kind == "template":
        return _recognize_template(img, spec)
    return _recognize_external(img, spec, resolve_engine(spec))


# --- reading assembly --------------------------------------------------------------

def parse_reading(
    raw_text: str, channel: str, ranges: dict[str, ChannelRange] | None = None
) -> int | None:
    """Integer value of a raw OCR string, or None when it must be rejected.

    Accepts only all-digit text (after trimming whitespace) whose integer lies
    within the channel's plausibility range. Passing ``ranges=None`` (or a
    mapping without this channel) disables the range gate.
    """
    text = raw_text.strip()
    if not text or _DIGITS_RE.fullmatch(text) is None:
        return None
    value = int(text)
    if ranges is not None and channel in ranges and not ranges[channel].contains(value):
        return None
    return value


@dataclass(frozen=True)
class FrameError:
    t_seconds: int
    channel: str
    message: str


@dataclass
class ExtractResult:
    """Per-channel reading lists (one entry per frame) plus the error log."""

    readings: dict[str, list[Reading]]
    errors: list[FrameError] = field(default_factory=list)

    def series(self, channel: str) -> TelemetrySeries:
        return readings_to_series(self.readings[channel], channel)


def extract_series(
    frames: list[tuple[int, Path | str | GrayImage]],
    rois: list[RoiSpec],
    spec: RecognizerSpec = RecognizerSpec(),
    ranges: dict[str, ChannelRange] | None = None,
    params: PreprocessParams = PreprocessParams(),
    jobs: int = 1,
) -> ExtractResult:
    """Recognize every (frame, roi) cell into a Reading, never fabricating values.

    Frames must be ordered by timestamp. Recognition runs as a bounded
    concurrent map over frames (``jobs`` workers) while results are emitted in
    timestamp order. A recognizer failure on one frame is logged and recorded
    as a gap; it never aborts the run.

    Args:
        frames: (t_seconds, frame) pairs; each frame is a PNG path or raster.
        rois: readout rectangles, one per channel.
        spec: recognizer backend configuration.
        ranges: plausibility gate per channel (None disables gating).
        params: preprocessing chain parameters.
        jobs: maximum concurrent frame recognitions (and engine subprocesses).
    """
    if ranges is None:
        ranges = DEFAULT_RANGES
    engine = resolve_engine(spec) if spec.kind == "external" else None

    def work(item: tuple[int, Path | str | GrayImage]):
        t_seconds, frame = item
        raster = frame if isinstance(frame, GrayImage) else load_gray(frame)
        cell_readings: list[Reading] = []
        cell_errors: list[FrameError] = []
        for roi in rois:
            try:
                processed = preprocess_roi(raster, roi, params)
                if spec.kind == "template":
                    raw, confidence = _recognize_template(processed, spec)
                else:
                    raw, confidence = _recognize_external(processed, spec, engine)
                value = parse_reading(raw, roi.channel, ranges)
            except Exception as exc:  # logged per frame, run continues
                cell_errors.append(FrameError(t_seconds, roi.channel, f"{type(exc).__name__}: {exc}"))
                raw, confidence, value = "", 0.0, None
            cell_readings.append(Reading(t_seconds, roi.channel, raw, value, confidence))
        return cell_readings, cell_errors

    readings: dict[str, list[Reading]] = {roi.channel: [] for roi in rois}
    errors: list[FrameError] = []
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for cell_readings, cell_errors in pool.map(work, frames):
            for reading in cell_readings:
                readings[reading.channel].append(reading)
            errors.extend(cell_errors)
    return ExtractResult(readings=readings, errors=errors)


def readings_to_series(readings: list[Reading], channel: str) -> TelemetrySeries:
    """Drop the gaps of a reading list, leaving the valued samples as a series."""
    pairs = [(r.t_seconds, float(r.value)) for r in readings if r.value is not None]
    return TelemetrySeries.from_pairs(channel, pairs)


# --- artifact I/O -------------------------------------------------------------------

def write_telemetry_csv(path: str | Path, readings: dict[str, list[Reading]]) -> None:
    """Write `t_seconds,channel,raw_text,value,confidence`, one row per frame x channel."""
    channels = list(readings)
    n_frames = len(readings[channels[0]]) if channels else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds", "channel", "raw_text", "value", "confidence"])
        for i in range(n_frames):
            for channel in channels:
                r = readings[channel][i]
                writer.writerow(
                    [r.t_seconds, r.channel, r.raw_text,
                     "" if r.value is None else r.value, repr(float(r.confidence))]
                )


def read_telemetry_csv(path: str | Path) -> dict[str, list[Reading]]:
    """Parse a telemetry CSV back into per-channel reading lists."""
    readings: dict[str, list[Reading]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            reading = Reading(
                t_seconds=int(row["t_seconds"]),
                channel=row["channel"],
                raw_text=row["raw_text"],
                value=int(row["value"]) if row["value"] else None,
                confidence=float(row["confidence"]),
            )
            readings.setdefault(reading.channel, []).append(reading)
    return readings
