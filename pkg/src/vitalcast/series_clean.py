"""Statistical cleaning of telemetry series.

Two steps run in order over each channel: a single-pass z-score cut (samples
whose score against the full-input moments exceeds the threshold are dropped)
and an exponential moving average over the survivors. An optional absolute
value clamp sits between them, disabled by default.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptySeries

#: Default smoothing weight, the common 2 / (N + 1) rule with N = 30 samples.
DEFAULT_EMA_ALPHA = 2.0 / 31.0


@dataclass
class TelemetrySeries:
    """Ordered 1 Hz samples for one channel; gaps simply have no entry."""

    channel: str
    t: np.ndarray       # int seconds, strictly increasing
    values: np.ndarray  # float64, finite

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.t.shape != self.values.shape or self.t.ndim != 1:
            raise ValueError("t and values must be 1-D arrays of equal length")
        if len(self.t) > 1 and not (np.diff(self.t) > 0).all():
            raise ValueError(f"timestamps of {self.channel!r} must be strictly increasing")
        if len(self.values) and not np.isfinite(self.values).all():
            raise ValueError(f"values of {self.channel!r} must be finite")

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_pairs(cls, channel: str, pairs) -> "TelemetrySeries":
        ts = [p[0] for p in pairs]
        vs = [p[1] for p in pairs]
        return cls(channel, np.array(ts, dtype=np.int64), np.array(vs, dtype=np.float64))


@dataclass(frozen=True)
class CleanParams:
    """Knobs of the cleaning pass.

    ``ema_alpha`` of None means :data:`DEFAULT_EMA_ALPHA`. ``sample_std``
    switches the z-score denominator from population (1/n) to sample (1/(n-1)).
    ``value_bounds`` is an optional (min, max) clamp applied after the z cut.
    """

    z_threshold: float = 3.0
    ema_alpha: float | None = None
    two_sided: bool = True
    sample_std: bool = False
    value_bounds: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.z_threshold <= 0:
            raise ValueError(f"z_threshold must be positive, got {self.z_threshold}")
        alpha = self.resolved_alpha
        if not (0.0 < alpha <= 1.0):
            raise ValueError(f"ema_alpha must be in (0, 1], got {alpha}")

    @property
    def resolved_alpha(self) -> float:
        return DEFAULT_EMA_ALPHA if self.ema_alpha is None else self.ema_alpha


@dataclass(frozen=True)
class RemovedSample:
    t: int
    value: float
    z: float


def series_stats(series: TelemetrySeries, sample_std: bool = False) -> tuple[float, float]:
    """Mean and standard deviation (population by default) of the values."""
    if len(series) == 0:
        raise EmptySeries(f"series {series.channel!r} has no samples")
    mean = float(series.values.mean())
    ddof = 1 if sample_std else 0
    if len(series) <= ddof:
        return mean, 0.0
    std = float(series.values.std(ddof=ddof))
    return mean, std


def zscore_filter(
    series: TelemetrySeries, params: CleanParams = CleanParams()
) -> tuple[TelemetrySeries, list[RemovedSample]]:
    """Single-pass outlier cut against the full-input mean and std.

    A sample is kept when ``|z| <= threshold`` (or ``z <= threshold`` in
    one-sided mode). Fewer than two samples, or zero variance, passes
    everything through: a constant series has no outliers.
    """
    if len(series) < 2:
        return series, []
    mean, std = series_stats(series, sample_std=params.sample_std)
    if std == 0.0:
        return series, []
    z = (series.values - mean) / std
    exceeds = np.abs(z) > params.z_threshold if params.two_sided else z > params.z_threshold
    if params.value_bounds is not None:
        lo, hi = params.value_bounds
        exceeds |= (series.values < lo) | (series.values > hi)
    kept = TelemetrySeries(series.channel, series.t[~exceeds], series.values[~exceeds])
    removed = [
        RemovedSample(int(t), float(v), float(score))
        for t, v, score in zip(series.t[exceeds], series.values[exceeds], z[exceeds])
    ]
    return kept, removed


def ema(series: TelemetrySeries, alpha: float = DEFAULT_EMA_ALPHA) -> TelemetrySeries:
    """Exponential moving average ``y[t] = alpha * x[t] + (1 - alpha) * y[t-1]``.

    The recurrence runs over present samples in order; gaps carry state across
    rather than resetting, so short OCR dropouts do not restart the smoother.
    Output timestamps equal input timestamps. Alpha 1 is the identity.
    """
    if len(series) == 0:
        raise EmptySeries(f"series {series.channel!r} has no samples")
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    out = np.empty_like(series.values)
    state = series.values[0]
    out[0] = state
    for i in range(1, len(series)):
        # y + a*(x - y) form keeps alpha == 1 an exact identity
        state = state + alpha * (series.values[i] - state)
        out[i] = state
    return TelemetrySeries(series.channel, series.t.copy(), out)


@dataclass
class CleanedChannel:
    """One channel after the full cleaning pass."""

    kept: TelemetrySeries
    smoothed: TelemetrySeries
    removed: list[RemovedSample] = field(default_factory=list)


def clean_series(series: TelemetrySeries, params: CleanParams = CleanParams()) -> CleanedChannel:
    """Run z-score filtering followed by EMA smoothing on one channel."""
    kept, removed = zscore_filter(series, params)
    if len(kept) == 0:
        empty = TelemetrySeries(series.channel, np.array([], dtype=np.int64), np.array([]))
        return CleanedChannel(kept=empty, smoothed=empty, removed=removed)
    smoothed = ema(kept, params.resolved_alpha)
    return CleanedChannel(kept=kept, smoothed=smoothed, removed=removed)


# --- artifact I/O ---------------------------------------------------------------

def write_cleaned_csv(path: str | Path, cleaned: dict[str, CleanedChannel]) -> None:
    """Write `t_seconds,channel,value,ema` rows, channels in mapping order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds", "channel", "value", "ema"])
        for channel, result in cleaned.items():
            for t, v, s in zip(result.kept.t, result.kept.values, result.smoothed.values):
                writer.writerow([int(t), channel, _fmt(v), _fmt(s)])


def write_removals_csv(path: str | Path, cleaned: dict[str, CleanedChannel]) -> None:
    """Write `t_seconds,channel,value,z` rows for every removed sample."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds", "channel", "value", "z"])
        for channel, result in cleaned.items():
            for sample in result.removed:
                writer.writerow([sample.t, channel, _fmt(sample.value), _fmt(sample.z)])


def read_cleaned_csv(path: str | Path) -> dict[str, CleanedChannel]:
    """Parse a cleaned-series CSV back into per-channel series."""
    rows: dict[str, list[tuple[int, float, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["channel"], []).append(
                (int(row["t_seconds"]), float(row["value"]), float(row["ema"]))
            )
    out: dict[str, CleanedChannel] = {}
    for channel, triples in rows.items():
        ts = np.array([r[0] for r in triples], dtype=np.int64)
        vals = np.array([r[1] for r in triples])
        smooth = np.array([r[2] for r in triples])
        out[channel] = CleanedChannel(
            kept=TelemetrySeries(channel, ts, vals),
            smoothed=TelemetrySeries(channel, ts.copy(), smooth),
        )
    return out


def _fmt(value: float) -> str:
    value = float(value)
    if math.isfinite(value) and value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)
