"""Ingestion of emotion-channel CSV exports and alignment onto the 1 Hz grid.

Exports are expected to carry a millisecond timestamp column plus one column
per emotion channel (the seven discrete measures and, optionally, valence,
attention and engagement). Column names are mapped to canonical channel names
through a configurable mapping so any vendor export can be consumed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyExport, MissingColumn
from .series_clean import TelemetrySeries

#: Canonical channel order used for artifacts and aligned columns.
CANONICAL_CHANNELS = (
    "joy",
    "anger",
    "sadness",
    "contempt",
    "fear",
    "surprise",
    "disgust",
    "valence",
    "attention",
    "engagement",
)

#: Default export-column -> canonical-channel mapping (iMotions-style headers).
DEFAULT_CHANNEL_MAP = {
    "Joy": "joy",
    "Anger": "anger",
    "Sadness": "sadness",
    "Contempt": "contempt",
    "Fear": "fear",
    "Surprise": "surprise",
    "Disgust": "disgust",
    "Valence": "valence",
    "Attention": "attention",
    "Engagement": "engagement",
}


@dataclass(frozen=True)
class EmotionMapping:
    """How to read one vendor's export: timestamp column, channel map, offset."""

    timestamp_column: str = "Timestamp"
    channel_map: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_CHANNEL_MAP))
    offset_ms: int = 0


@dataclass
class EmotionSeries:
    """Timestamped multi-channel emotion values, timestamps in milliseconds."""

    timestamps_ms: np.ndarray
    channels: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        self.timestamps_ms = np.asarray(self.timestamps_ms, dtype=np.int64)
        if len(self.timestamps_ms) > 1 and not (np.diff(self.timestamps_ms) > 0).all():
            raise ValueError("timestamps must be strictly increasing")
        for name, values in self.channels.items():
            values = np.asarray(values, dtype=np.float64)
            if values.shape != self.timestamps_ms.shape:
                raise ValueError(f"channel {name!r} length does not match timestamps")
            if len(values) and not np.isfinite(values).all():
                raise ValueError(f"channel {name!r} contains non-finite values")
            self.channels[name] = values

    def __len__(self) -> int:
        return len(self.timestamps_ms)

    def channel_names(self) -> list[str]:
        """Present channels, canonical ones first, extras in name order."""
        known = [c for c in CANONICAL_CHANNELS if c in self.channels]
        extra = sorted(c for c in self.channels if c not in CANONICAL_CHANNELS)
        return known + extra


@dataclass
class AlignedDataset:
    """Per-second feature grid 0..T; absent cells are NaN."""

    grid: np.ndarray                     # int seconds 0..T
    columns: dict[str, np.ndarray]       # feature -> float64 of len T+1, NaN = absent

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=np.int64)
        for name, values in self.columns.items():
            values = np.asarray(values, dtype=np.float64)
            if values.shape != self.grid.shape:
                raise ValueError(f"column {name!r} length does not match grid")
            self.columns[name] = values

    @property
    def features(self) -> list[str]:
        return list(self.columns)

    def present(self, feature: str) -> np.ndarray:
        return np.isfinite(self.columns[feature])


def parse_emotion_csv(
    path: str | Path, mapping: EmotionMapping = EmotionMapping()
) -> tuple[EmotionSeries, int]:
    """Parse a vendor export into an :class:`EmotionSeries`.

    Rows whose timestamp or mapped channel values fail to parse as numbers are
    skipped and counted; duplicate timestamps collapse to the last row in file
    order. The configured ``offset_ms`` is added to every timestamp.

    Returns:
        (series, skipped_row_count)

    Raises:
        MissingColumn: timestamp column or every mapped channel column absent.
        EmptyExport: no parseable data rows.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if mapping.timestamp_column not in header:
            raise MissingColumn(f"timestamp column {mapping.timestamp_column!r} not in export header")
        present_map = {col: canon for col, canon in mapping.channel_map.items() if col in header}
        if not present_map:
            raise MissingColumn("no mapped emotion channel column found in export header")
        by_ts: dict[int, dict[str, float]] = {}
        skipped = 0
        for row in reader:
            try:
                ts = int(round(float(row[mapping.timestamp_column])))
                values = {canon: float(row[col]) for col, canon in present_map.items()}
            except (TypeError, ValueError):
                skipped += 1
                continue
            by_ts[ts + mapping.offset_ms] = values  # later rows win
    if not by_ts:
        raise EmptyExport(f"{path} contains no parseable data rows")
    order = sorted(by_ts)
    timestamps = np.array(order, dtype=np.int64)
    channels = {
        canon: np.array([by_ts[ts][canon] for ts in order], dtype=np.float64)
        for canon in present_map.values()
    }
    return EmotionSeries(timestamps, channels), skipped


def align(
    emotion: EmotionSeries | None,
    telemetry: list[TelemetrySeries],
    duration_s: int,
) -> AlignedDataset:
    """Join emotion and telemetry onto the integer-second grid 0..duration_s.

    Emotion samples falling in ``[k, k+1)`` seconds aggregate to cell ``k`` by
    arithmetic mean; telemetry values land at their own second. Cells with no
    source sample stay NaN, never interpolated.
    """
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    grid = np.arange(duration_s + 1, dtype=np.int64)
    columns: dict[str, np.ndarray] = {}
    for series in telemetry:
        col = np.full(duration_s + 1, np.nan)
        mask = (series.t >= 0) & (series.t <= duration_s)
        col[series.t[mask]] = series.values[mask]
        columns[series.channel] = col
    if emotion is not None and len(emotion):
        seconds = emotion.timestamps_ms // 1000
        mask = (seconds >= 0) & (seconds <= duration_s)
        idx = seconds[mask]
        counts = np.bincount(idx, minlength=duration_s + 1).astype(np.float64)
        for name in emotion.channel_names():
            sums = np.bincount(idx, weights=emotion.channels[name][mask], minlength=duration_s + 1)
            col = np.full(duration_s + 1, np.nan)
            has = counts > 0
            col[has] = sums[has] / counts[has]
            columns[name] = col
    return AlignedDataset(grid, columns)


# --- artifact I/O ---------------------------------------------------------------

def write_emotion_csv(path: str | Path, series: EmotionSeries) -> None:
    """Write the canonicalized export artifact: `t_ms` plus one column per channel."""
    names = series.channel_names()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_ms"] + names)
        for i, ts in enumerate(series.timestamps_ms):
            writer.writerow([int(ts)] + [repr(float(series.channels[n][i])) for n in names])


def read_emotion_csv(path: str | Path) -> EmotionSeries:
    """Read back the canonical artifact written by :func:`write_emotion_csv`."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if "t_ms" not in header:
            raise MissingColumn("canonical emotion artifact lacks a t_ms column")
        names = [c for c in header if c != "t_ms"]
        ts: list[int] = []
        data: dict[str, list[float]] = {n: [] for n in names}
        for row in reader:
            ts.append(int(row["t_ms"]))
            for n in names:
                data[n].append(float(row[n]))
    if not ts:
        raise EmptyExport(f"{path} contains no rows")
    return EmotionSeries(
        np.array(ts, dtype=np.int64),
        {n: np.array(v, dtype=np.float64) for n, v in data.items()},
    )
