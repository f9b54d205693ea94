"""Correlate power with a constructed valence channel and export the reports.

Generates a 30-minute interval session, builds emotion channels whose valence
tracks power at rho = 0.36, aligns everything on the 1 Hz grid, and emits the
plot-ready artifacts (matrix.csv, windows.csv, tradeoff.csv, session.json).

Run:  python demos/04_correlation_report.py
"""

from pathlib import Path

import numpy as np

from vitalcast import (
    TelemetrySeries,
    align,
    correlation_matrix,
    export_report,
    generate_correlated_emotion,
    generate_truth,
    tradeoff_series,
    windowed_correlation,
)
from vitalcast.emotion_ingest import EmotionSeries

out_dir = Path("demo_output/04_correlation")

truth = generate_truth(1800, profile="interval", seed=42)
emotion_channels = generate_correlated_emotion(truth, rho=0.36)
print(f"constructed valence to track power at rho=0.36 over {truth.duration}s")

telemetry = [
    TelemetrySeries("heart_rate", np.arange(truth.duration), truth.hr.astype(float)),
    TelemetrySeries("power", np.arange(truth.duration), truth.power.astype(float)),
]
emotion = EmotionSeries(np.arange(truth.duration, dtype=np.int64) * 1000, emotion_channels)
data = align(emotion, telemetry, duration_s=truth.duration - 1)
print(f"aligned grid: {len(data.grid)} seconds x {len(data.features)} features")

# Per-minute windows of power land exactly on the half-periods of the square
# wave, so power is constant inside every window and r is undefined there; the
# heart-rate channel keeps varying (first-order lag) and stays correlatable.
windows = windowed_correlation(data, ("power", "valence"), window_s=60, step_s=60)
windows += windowed_correlation(data, ("heart_rate", "valence"), window_s=60, step_s=60)
report = correlation_matrix(data, windows=windows)
print(f"\nfull-session r(power, valence) = {report.value('power', 'valence'):+.4f}")
print(f"full-session r(power, heart_rate) = {report.value('power', 'heart_rate'):+.4f}")

for pair in (("power", "valence"), ("heart_rate", "valence")):
    pair_windows = [w for w in windows if (w.feature_a, w.feature_b) == pair]
    defined = [w for w in pair_windows if w.r is not None]
    label = f"{pair[0]}~{pair[1]}"
    if defined:
        print(f"per-minute {label}: {len(defined)}/{len(pair_windows)} defined, "
              f"r range [{min(w.r for w in defined):+.3f}, {max(w.r for w in defined):+.3f}]")
    else:
        reasons = {w.reason for w in pair_windows}
        print(f"per-minute {label}: 0/{len(pair_windows)} defined ({', '.join(sorted(reasons))}: "
              "the square wave is constant inside every aligned minute)")

tradeoff = tradeoff_series(data, ("attention", "valence"), alpha=2.0 / 31.0)
files = export_report(report, tradeoff, out_dir, manifest={"demo": "04_correlation", "seed": 42})
print("\nwrote:")
for path in files:
    print(f"  {path}")
