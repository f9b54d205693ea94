"""Clean a telemetry series: z-score outlier cut plus EMA smoothing.

Builds a heart-rate trace with a handful of OCR-style misreads injected,
shows which samples the 3-sigma cut removes and what the smoother does,
and writes the cleaned/removals CSV artifacts.

Run:  python demos/03_cleaning_telemetry.py
"""

from pathlib import Path

import numpy as np

from vitalcast import CleanParams, TelemetrySeries, clean_series, generate_truth, series_stats
from vitalcast.series_clean import write_cleaned_csv, write_removals_csv

out_dir = Path("demo_output/03_cleaning")
out_dir.mkdir(parents=True, exist_ok=True)

# A steady session that has settled, plus misreads an OCR stage might produce.
truth = generate_truth(600, profile="steady", seed=11)
values = truth.hr[240:].astype(float)
misread_at = {30: 214.0, 95: 61.0, 200: 240.0, 280: 58.0}
for index, bad in misread_at.items():
    values[index] = bad
series = TelemetrySeries("heart_rate", np.arange(len(values)), values)

mean, std = series_stats(series)
print(f"input: {len(series)} samples, mean {mean:.1f} bpm, population std {std:.2f}")

result = clean_series(series, CleanParams(z_threshold=3.0))
print(f"\nz-score cut removed {len(result.removed)} samples:")
for removed in result.removed:
    print(f"  t={removed.t:>3}  value {removed.value:>6.1f}  z {removed.z:+.2f}")

residual = result.smoothed.values - truth.hr[240:][result.kept.t]
print(f"\nafter EMA (alpha {CleanParams().resolved_alpha:.4f}): "
      f"RMSE vs ground truth {np.sqrt(np.mean(residual**2)):.3f} bpm")

write_cleaned_csv(out_dir / "cleaned.csv", {"heart_rate": result})
write_removals_csv(out_dir / "removals.csv", {"heart_rate": result})
print(f"artifacts in {out_dir}/")
