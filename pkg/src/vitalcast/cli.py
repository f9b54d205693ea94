"""Command-line entry point wiring configuration to pipeline stages.

Each subcommand runs one stage and writes that stage's artifacts plus a
manifest under the configured output directory; ``run`` chains every stage the
configuration calls for. Stages communicate only through their artifacts, so
any stage can be re-run from its predecessor's outputs alone.

Exit codes: 0 success, 2 configuration error, 3 missing external tool,
4 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, emotion_ingest, ocr, series_clean, synth, video_prep
from .config import PipelineConfig, load_config
from .errors import ConfigError, EngineMissing, MediaToolMissing, VitalcastError
from .manifest import build_manifest, tool_versions, write_manifest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING_TOOL = 3
EXIT_STAGE_FAILURE = 4


# --- stage implementations -----------------------------------------------------------

def stage_synth(cfg: PipelineConfig, jobs: int) -> dict:
    """Generate the synthetic fixture: frames, truth table, emotion export."""
    if cfg.synth is None:
        raise ConfigError("synth stage requires a synth section in the config")
    out = cfg.output_dir / "synth"
    truth = synth.generate_truth(cfg.synth.duration, cfg.synth.profile, cfg.seed, cfg.synth.params)
    frames, _ = synth.render_frames(truth, cfg.synth.layout, out_dir=out, noise=cfg.synth.noise)
    counts = {"frames": len(frames), "duration_s": truth.duration}
    versions = tool_versions()
    if cfg.synth.emotion_rho is not None:
        emotion = synth.generate_correlated_emotion(truth, cfg.synth.emotion_rho)
        synth.write_emotion_export_csv(out / "emotion_export.csv", emotion, cfg.synth.emotion_cadence_ms)
        counts["emotion_rows"] = truth.duration * (1000 // cfg.synth.emotion_cadence_ms)
    if cfg.synth.assemble_video:
        tool = video_prep.resolve_media_tool(cfg.video.media_tool_path if cfg.video else None)
        synth.assemble_video(out / "frames", out / "video.mp4", cfg.synth.assemble_fps, tool)
        counts["video"] = 1
        versions = tool_versions(media_tool=video_prep.media_tool_version(tool))
    write_manifest(out / "manifest.json",
                   build_manifest("synth", cfg.config_hash, cfg.seed, counts, versions))
    return counts


def stage_prep(cfg: PipelineConfig, jobs: int) -> dict:
    """Trim, fps-normalize, concatenate and crop sources; emit 1 fps frames."""
    if cfg.video is None:
        raise ConfigError("prep stage requires a video section in the config")
    tool = video_prep.resolve_media_tool(cfg.video.media_tool_path)
    out = cfg.output_dir / "prep"
    out.mkdir(parents=True, exist_ok=True)
    full = out / "full.mp4"
    meta = video_prep.normalize_and_concat(cfg.video.plan, full, tool)
    counts = {"parts": len(cfg.video.plan.parts), "duration_s": round(meta.duration, 2)}
    if cfg.video.plan.inset_roi is not None:
        video_prep.crop_video(full, cfg.video.plan.inset_roi, out / "inset.mp4", tool)
        counts["inset"] = 1
    frames = video_prep.extract_frames(full, 1.0, out / "frames", tool)
    counts["frames"] = len(frames)
    write_manifest(out / "manifest.json",
                   build_manifest("prep", cfg.config_hash, cfg.seed, counts,
                                  tool_versions(media_tool=video_prep.media_tool_version(tool))))
    return counts


def _frames_dir(cfg: PipelineConfig) -> Path:
    if cfg.mode == "synth":
        return cfg.output_dir / "synth" / "frames"
    if cfg.mode == "video":
        return cfg.output_dir / "prep" / "frames"
    assert cfg.frames_dir is not None
    return cfg.frames_dir


def stage_extract(cfg: PipelineConfig, jobs: int) -> dict:
    """OCR every frame's metric ROIs into the telemetry CSV."""
    frames_dir = _frames_dir(cfg)
    frame_files = sorted(frames_dir.glob("frame_*.png"))
    if not frame_files:
        raise VitalcastError(f"no frames found under {frames_dir}; run the input stage first")
    frames = [(int(f.stem.split("_")[1]), f) for f in frame_files]
    result = ocr.extract_series(frames, cfg.rois, cfg.recognizer, cfg.ranges, cfg.image, jobs=jobs)
    out = cfg.output_dir / "extract"
    out.mkdir(parents=True, exist_ok=True)
    ocr.write_telemetry_csv(out / "telemetry.csv", result.readings)
    _write_errors_csv(out / "errors.csv", result.errors)
    gaps = sum(1 for rs in result.readings.values() for r in rs if r.value is None)
    counts = {
        "frames": len(frames),
        "channels": len(cfg.rois),
        "readings": sum(len(rs) for rs in result.readings.values()),
        "gaps": gaps,
        "errors": len(result.errors),
    }
    engine = (ocr.engine_version(cfg.recognizer)
              if cfg.recognizer.kind == "external" else "template")
    write_manifest(out / "manifest.json",
                   build_manifest("extract", cfg.config_hash, cfg.seed, counts,
                                  tool_versions(ocr_engine=engine)))
    return counts


def stage_clean(cfg: PipelineConfig, jobs: int) -> dict:
    """Z-score filter and EMA-smooth the extracted telemetry."""
    telemetry_csv = cfg.output_dir / "extract" / "telemetry.csv"
    if not telemetry_csv.exists():
        raise VitalcastError(f"{telemetry_csv} not found; run extract first")
    readings = ocr.read_telemetry_csv(telemetry_csv)
    cleaned: dict[str, series_clean.CleanedChannel] = {}
    for channel, channel_readings in readings.items():
        series = ocr.readings_to_series(channel_readings, channel)
        cleaned[channel] = series_clean.clean_series(series, cfg.clean)
    out = cfg.output_dir / "clean"
    out.mkdir(parents=True, exist_ok=True)
    series_clean.write_cleaned_csv(out / "cleaned.csv", cleaned)
    series_clean.write_removals_csv(out / "removals.csv", cleaned)
    counts = {
        "channels": len(cleaned),
        "kept": sum(len(c.kept) for c in cleaned.values()),
        "removed": sum(len(c.removed) for c in cleaned.values()),
    }
    write_manifest(out / "manifest.json",
                   build_manifest("clean", cfg.config_hash, cfg.seed, counts))
    return counts


def _emotion_source(cfg: PipelineConfig) -> Path | None:
    if cfg.emotion.path is not None:
        return cfg.emotion.path
    if cfg.mode == "synth" and cfg.synth is not None and cfg.synth.emotion_rho is not None:
        return cfg.output_dir / "synth" / "emotion_export.csv"
    return None


def stage_ingest_emotion(cfg: PipelineConfig, jobs: int) -> dict:
    """Parse the emotion export into the canonical per-channel artifact."""
    source = _emotion_source(cfg)
    if source is None:
        raise ConfigError("no emotion source: set emotion.path or enable synth emotion_rho")
    if not source.exists():
        raise VitalcastError(f"emotion export {source} not found")
    mapping = cfg.emotion.mapping
    series, skipped = emotion_ingest.parse_emotion_csv(source, mapping)
    out = cfg.output_dir / "emotion"
    out.mkdir(parents=True, exist_ok=True)
    emotion_ingest.write_emotion_csv(out / "emotion.csv", series)
    counts = {"rows": len(series), "skipped_rows": skipped, "channels": len(series.channels)}
    write_manifest(out / "manifest.json",
                   build_manifest("ingest_emotion", cfg.config_hash, cfg.seed, counts))
    return counts


def stage_analyze(cfg: PipelineConfig, jobs: int) -> dict:
    """Align cleaned telemetry with emotion channels and export the reports."""
    cleaned_csv = cfg.output_dir / "clean" / "cleaned.csv"
    if not cleaned_csv.exists():
        raise VitalcastError(f"{cleaned_csv} not found; run clean first")
    cleaned = series_clean.read_cleaned_csv(cleaned_csv)
    telemetry = [c.kept for c in cleaned.values()]
    emotion_csv = cfg.output_dir / "emotion" / "emotion.csv"
    emotion = emotion_ingest.read_emotion_csv(emotion_csv) if emotion_csv.exists() else None
    last_second = max((int(s.t[-1]) for s in telemetry if len(s)), default=0)
    if emotion is not None and len(emotion):
        last_second = max(last_second, int(emotion.timestamps_ms[-1] // 1000))
    if last_second <= 0:
        raise VitalcastError("nothing to analyze: no telemetry or emotion samples")
    data = emotion_ingest.align(emotion, telemetry, last_second)
    if len(data.features) < 2:
        raise VitalcastError("analysis needs at least two feature columns")

    windows: list[analysis.WindowCorrelation] = []
    skipped_pairs: list[list[str]] = []
    for pair in cfg.analysis.pairs:
        if all(f in data.columns for f in pair):
            windows += analysis.windowed_correlation(data, pair, cfg.analysis.window_s, cfg.analysis.step_s)
        else:
            skipped_pairs.append(list(pair))
    report = analysis.correlation_matrix(data, data.features, windows=windows)
    alpha = cfg.analysis.ema_alpha if cfg.analysis.ema_alpha is not None else series_clean.DEFAULT_EMA_ALPHA
    if all(f in data.columns for f in cfg.analysis.tradeoff_pair):
        tradeoff = analysis.tradeoff_series(data, cfg.analysis.tradeoff_pair, alpha)
    else:
        tradeoff = {}
        skipped_pairs.append(list(cfg.analysis.tradeoff_pair))
    counts = {
        "features": len(data.features),
        "grid_seconds": len(data.grid),
        "windows": len(windows),
        "defined_cells": int(np.isfinite(report.matrix).sum()),
    }
    manifest = build_manifest("analyze", cfg.config_hash, cfg.seed, counts,
                              extra={"skipped_pairs": skipped_pairs})
    analysis.export_report(report, tradeoff, cfg.output_dir / "analysis", manifest)
    write_manifest(cfg.output_dir / "analysis" / "manifest.json", manifest)
    return counts


def stage_run(cfg: PipelineConfig, jobs: int) -> dict:
    """Chain every stage the configuration calls for."""
    stages = []
    if cfg.mode == "synth":
        stages.append(("synth", stage_synth))
    elif cfg.mode == "video":
        stages.append(("prep", stage_prep))
    stages += [("extract", stage_extract), ("clean", stage_clean)]
    if _emotion_source(cfg) is not None:
        stages.append(("ingest_emotion", stage_ingest_emotion))
    stages.append(("analyze", stage_analyze))
    counts = {}
    for name, stage in stages:
        counts[name] = stage(cfg, jobs)
    return counts


STAGES = {
    "synth": stage_synth,
    "prep": stage_prep,
    "extract": stage_extract,
    "clean": stage_clean,
    "ingest-emotion": stage_ingest_emotion,
    "analyze": stage_analyze,
    "run": stage_run,
}


# --- entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vitalcast",
        description="Extract exercise telemetry from workout-stream videos and "
                    "correlate it with emotion-channel exports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "synth": "generate a synthetic ground-truth fixture",
        "prep": "trim/normalize/concatenate source videos and emit 1 fps frames",
        "extract": "OCR metric readouts from frames into telemetry.csv",
        "clean": "z-score filter and EMA-smooth the telemetry",
        "ingest-emotion": "canonicalize an emotion-channel export",
        "analyze": "align channels and export correlation reports",
        "run": "run every configured stage in order",
    }
    for name, help_text in descriptions.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("-c", "--config", required=True, help="path to the pipeline config JSON")
        cmd.add_argument("--set", action="append", default=[], metavar="KEY.PATH=VALUE",
                         help="override a config key (value parsed as JSON when possible)")
        cmd.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                         help="worker bound for frame-parallel stages (default: logical cores)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, overrides=args.set)
        counts = STAGES[args.command](cfg, max(1, args.jobs))
    except ConfigError as exc:
        print(f"vitalcast: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MediaToolMissing, EngineMissing) as exc:
        print(f"vitalcast: missing tool: {exc}", file=sys.stderr)
        return EXIT_MISSING_TOOL
    except VitalcastError as exc:
        print(f"vitalcast: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILURE
    print(f"{args.command}: ok {counts}")
    return EXIT_OK


def _write_errors_csv(path: Path, errors: list[ocr.FrameError]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds", "channel", "error"])
        for err in errors:
            writer.writerow([err.t_seconds, err.channel, err.message])


if __name__ == "__main__":
    sys.exit(main())
