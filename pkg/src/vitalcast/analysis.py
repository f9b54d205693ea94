"""Pearson correlation reports over the aligned feature grid.

Produces the full-session correlation matrix, per-minute tumbling-window
correlations, and the smoothed two-feature tradeoff series, and exports them
as plot-ready CSV/JSON files with deterministic names and bytes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .emotion_ingest import AlignedDataset
from .errors import IoFailure, TooFewPairs, UnknownFeature, ZeroVariance
from .series_clean import DEFAULT_EMA_ALPHA, TelemetrySeries, ema

REPORT_FILES = ("matrix.csv", "windows.csv", "tradeoff.csv", "session.json")


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equal-length vectors.

    ``r = sum((x - mx) * (y - my)) / sqrt(sum((x - mx)^2) * sum((y - my)^2))``

    Raises:
        TooFewPairs: fewer than two samples.
        ZeroVariance: either vector is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    n = len(x)
    if n < 2:
        raise TooFewPairs(f"need at least 2 pairs, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("correlation undefined for a constant vector")
    return float(np.dot(dx, dy)) / math.sqrt(sxx * syy)


def complete_pairs(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Restrict two NaN-gapped columns to indices where both are present."""
    mask = np.isfinite(x) & np.isfinite(y)
    return x[mask], y[mask]


@dataclass(frozen=True)
class WindowCorrelation:
    start_s: int
    end_s: int
    feature_a: str
    feature_b: str
    r: float | None
    n_pairs: int
    reason: str | None = None


@dataclass
class CorrelationReport:
    """Full-session matrix plus per-window results for selected pairs."""

    features: list[str]
    matrix: np.ndarray                       # (F, F) float64, NaN where undefined
    reasons: dict[tuple[str, str], str]      # why a cell is undefined
    windows: list[WindowCorrelation]

    def value(self, a: str, b: str) -> float | None:
        i, j = self.features.index(a), self.features.index(b)
        v = self.matrix[i, j]
        return None if math.isnan(v) else float(v)


def windowed_correlation(
    data: AlignedDataset,
    pair: tuple[str, str],
    window_s: int = 60,
    step_s: int = 60,
) -> list[WindowCorrelation]:
    """Correlate one feature pair over tumbling windows aligned to t = 0.

    Windows cover ``[k*step, k*step + window)``; a trailing window that would
    run past the grid is dropped. Within a window the correlation uses only
    seconds where both features are present; undefined windows report
    ``r=None`` with the reason and the pair count.
    """
    if window_s < 2:
        raise ValueError(f"window_s must be >= 2, got {window_s}")
    if step_s < 1:
        raise ValueError(f"step_s must be >= 1, got {step_s}")
    a, b = pair
    for feature in pair:
        if feature not in data.columns:
            raise UnknownFeature(f"feature {feature!r} not in aligned dataset")
    total = len(data.grid)
    col_a, col_b = data.columns[a], data.columns[b]
    results: list[WindowCorrelation] = []
    start = 0
    while start + window_s <= total:
        xs, ys = complete_pairs(col_a[start : start + window_s], col_b[start : start + window_s])
        r: float | None
        reason = None
        try:
            r = _clamp(pearson(xs, ys))
        except TooFewPairs:
            r, reason = None, "too_few_pairs"
        except ZeroVariance:
            r, reason = None, "zero_variance"
        results.append(WindowCorrelation(start, start + window_s, a, b, r, len(xs), reason))
        start += step_s
    return results


def correlation_matrix(
    data: AlignedDataset,
    features: list[str] | None = None,
    windows: list[WindowCorrelation] | None = None,
) -> CorrelationReport:
    """Pairwise full-session correlations over complete cases.

    The matrix is symmetric with a unit diagonal wherever the feature has
    variance; cells stay NaN (with a recorded reason) when undefined.
    """
    if features is None:
        features = data.features
    if len(features) < 2:
        raise ValueError("need at least two features")
    for feature in features:
        if feature not in data.columns:
            raise UnknownFeature(f"feature {feature!r} not in aligned dataset")
    size = len(features)
    matrix = np.full((size, size), np.nan)
    reasons: dict[tuple[str, str], str] = {}
    for i, a in enumerate(features):
        for j in range(i, size):
            b = features[j]
            xs, ys = complete_pairs(data.columns[a], data.columns[b])
            try:
                r = 1.0 if i == j and _has_variance(xs) else _clamp(pearson(xs, ys))
                matrix[i, j] = matrix[j, i] = r
            except TooFewPairs:
                reasons[(a, b)] = "too_few_pairs"
            except ZeroVariance:
                reasons[(a, b)] = "zero_variance"
    return CorrelationReport(list(features), matrix, reasons, list(windows or []))


def tradeoff_series(
    data: AlignedDataset,
    pair: tuple[str, str],
    alpha: float = DEFAULT_EMA_ALPHA,
) -> dict[str, np.ndarray]:
    """EMA-smooth both features of a pair on the common grid, gaps preserved.

    Returns a mapping feature -> column of len(grid), NaN where the source
    cell was absent. Alpha 1 reproduces the aligned values.
    """
    for feature in pair:
        if feature not in data.columns:
            raise UnknownFeature(f"feature {feature!r} not in aligned dataset")
    out: dict[str, np.ndarray] = {}
    for feature in pair:
        col = data.columns[feature]
        present = np.isfinite(col)
        smoothed = np.full_like(col, np.nan)
        if present.any():
            series = TelemetrySeries(feature, data.grid[present], col[present])
            smoothed[present] = ema(series, alpha).values
        out[feature] = smoothed
    return out


# --- report export ----------------------------------------------------------------

def export_report(
    report: CorrelationReport,
    tradeoff: dict[str, np.ndarray],
    out_dir: str | Path,
    manifest: dict | None = None,
    formats: tuple[str, ...] = ("csv", "json"),
) -> list[Path]:
    """Write the report artifacts with fixed names and deterministic bytes.

    ``csv`` emits matrix.csv, windows.csv and tradeoff.csv; ``json`` emits
    session.json carrying the same content plus the run manifest. Same inputs
    always produce byte-identical files.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        if "csv" in formats:
            written += [
                _write_matrix_csv(out_dir / "matrix.csv", report),
                _write_windows_csv(out_dir / "windows.csv", report.windows),
                _write_tradeoff_csv(out_dir / "tradeoff.csv", tradeoff),
            ]
        if "json" in formats:
            written.append(_write_session_json(out_dir / "session.json", report, tradeoff, manifest))
        return written
    except OSError as exc:
        raise IoFailure(f"failed writing report to {out_dir}: {exc}") from exc


def _write_matrix_csv(path: Path, report: CorrelationReport) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature"] + report.features)
        for i, name in enumerate(report.features):
            row: list[str] = [name]
            for j in range(len(report.features)):
                v = report.matrix[i, j]
                row.append("" if math.isnan(v) else repr(float(v)))
            writer.writerow(row)
    return path


def _write_windows_csv(path: Path, windows: list[WindowCorrelation]) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["start_s", "end_s", "feature_a", "feature_b", "r", "n_pairs"])
        for w in windows:
            writer.writerow(
                [w.start_s, w.end_s, w.feature_a, w.feature_b,
                 "" if w.r is None else repr(float(w.r)), w.n_pairs]
            )
    return path


def _write_tradeoff_csv(path: Path, tradeoff: dict[str, np.ndarray]) -> Path:
    names = list(tradeoff)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds"] + names)
        length = len(next(iter(tradeoff.values()))) if tradeoff else 0
        for t in range(length):
            row: list[str] = [t]
            for name in names:
                v = tradeoff[name][t]
                row.append("" if math.isnan(v) else repr(float(v)))
            writer.writerow(row)
    return path


def _write_session_json(
    path: Path,
    report: CorrelationReport,
    tradeoff: dict[str, np.ndarray],
    manifest: dict | None,
) -> Path:
    matrix = {
        a: {
            b: (None if math.isnan(report.matrix[i, j]) else report.matrix[i, j])
            for j, b in enumerate(report.features)
        }
        for i, a in enumerate(report.features)
    }
    payload = {
        "manifest": manifest or {},
        "features": report.features,
        "matrix": matrix,
        "undefined_cells": [
            {"feature_a": a, "feature_b": b, "reason": reason}
            for (a, b), reason in sorted(report.reasons.items())
        ],
        "windows": [
            {
                "start_s": w.start_s,
                "end_s": w.end_s,
                "feature_a": w.feature_a,
                "feature_b": w.feature_b,
                "r": w.r,
                "n_pairs": w.n_pairs,
                "reason": w.reason,
            }
            for w in report.windows
        ],
        "tradeoff_features": list(tradeoff),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_matrix_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Parse matrix.csv back into (features, matrix with NaN for blanks)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    features = rows[0][1:]
    matrix = np.full((len(features), len(features)), np.nan)
    for i, row in enumerate(rows[1:]):
        for j, cell in enumerate(row[1:]):
            if cell:
                matrix[i, j] = float(cell)
    return features, matrix


def read_windows_csv(path: str | Path) -> list[WindowCorrelation]:
    """Parse windows.csv back into window records (reasons are not stored)."""
    out: list[WindowCorrelation] = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                WindowCorrelation(
                    start_s=int(row["start_s"]),
                    end_s=int(row["end_s"]),
                    feature_a=row["feature_a"],
                    feature_b=row["feature_b"],
                    r=float(row["r"]) if row["r"] else None,
                    n_pairs=int(row["n_pairs"]),
                )
            )
    return out


def _clamp(r: float) -> float:
    return min(1.0, max(-1.0, r))


def _has_variance(values: np.ndarray) -> bool:
    return len(values) >= 2 and float(values.min()) != float(values.max())
