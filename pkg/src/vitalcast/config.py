"""Declarative pipeline configuration: one JSON document drives every stage.

The document is validated strictly on load: unknown keys are rejected, every
referenced input file must exist, and metric ROIs may not overlap. CLI flags
override individual keys through dotted paths before validation. The SHA-256
hash of the resolved document goes into every stage manifest so two runs are
comparable at the byte level.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .emotion_ingest import DEFAULT_CHANNEL_MAP, EmotionMapping
from .errors import ConfigError
from .image_ops import PreprocessParams, RoiSpec
from .ocr import ChannelRange, RecognizerSpec, DEFAULT_RANGES
from .series_clean import CleanParams
from .synth import ChannelLayout, FixtureLayout, NoiseParams, TruthParams
from .video_prep import PrepPlan, VideoPart


@dataclass
class VideoConfig:
    plan: PrepPlan
    media_tool_path: str | None = None


@dataclass
class SynthConfig:
    duration: int = 600
    profile: str = "interval"
    params: TruthParams = field(default_factory=TruthParams)
    layout: FixtureLayout = field(default_factory=FixtureLayout)
    noise: NoiseParams = field(default_factory=NoiseParams)
    emotion_rho: float | None = 0.36
    emotion_cadence_ms: int = 1000
    assemble_video: bool = False
    assemble_fps: int = 30


@dataclass
class EmotionConfig:
    path: Path | None = None
    mapping: EmotionMapping = field(default_factory=EmotionMapping)


@dataclass
class AnalysisConfig:
    pairs: list[tuple[str, str]] = field(default_factory=lambda: [("power", "valence")])
    window_s: int = 60
    step_s: int = 60
    tradeoff_pair: tuple[str, str] = ("attention", "valence")
    ema_alpha: float | None = None


@dataclass
class PipelineConfig:
    """Validated configuration; ``raw`` is the resolved document that was hashed."""

    seed: int
    output_dir: Path
    mode: str  # "video" | "synth" | "frames"
    rois: list[RoiSpec]
    image: PreprocessParams
    recognizer: RecognizerSpec
    ranges: dict[str, ChannelRange] | None
    clean: CleanParams
    emotion: EmotionConfig
    analysis: AnalysisConfig
    video: VideoConfig | None = None
    synth: SynthConfig | None = None
    frames_dir: Path | None = None
    raw: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return hash_config(self.raw)


def hash_config(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.path=value`` overrides; values parse as JSON, else strings."""
    out = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        dotted, _, text = item.partition("=")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = out
        keys = dotted.split(".")
        for key in keys[:-1]:
            nxt = node.setdefault(key, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {dotted!r} descends into non-object key {key!r}")
            node = nxt
        node[keys[-1]] = value
    return out


def load_config(path: str | Path, overrides: list[str] | None = None) -> PipelineConfig:
    """Load, override and validate a pipeline configuration document."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file does not exist: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if overrides:
        raw = apply_overrides(raw, overrides)
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path | None = None) -> PipelineConfig:
    """Validate a raw configuration dictionary (paths resolve against base_dir)."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    base = base_dir or Path(".")
    _check_keys(raw, {
        "seed", "output_dir", "video", "synth", "frames_dir", "rois", "image",
        "recognizer", "ranges", "clean", "emotion", "analysis",
    }, "top level")

    seed = _expect_int(raw.get("seed", 0), "seed")
    if "output_dir" not in raw:
        raise ConfigError("output_dir is required")
    output_dir = _resolve(base, raw["output_dir"])

    modes = [m for m in ("video", "synth", "frames_dir") if raw.get(m) is not None]
    if len(modes) != 1:
        raise ConfigError(
            f"exactly one input mode of video/synth/frames_dir is required, got {modes or 'none'}"
        )

    video = _parse_video(raw["video"], base) if raw.get("video") is not None else None
    synth = _parse_synth(raw["synth"]) if raw.get("synth") is not None else None
    frames_dir: Path | None = None
    if raw.get("frames_dir") is not None:
        frames_dir = _resolve(base, raw["frames_dir"])
        if not frames_dir.is_dir():
            raise ConfigError(f"frames_dir does not exist: {frames_dir}")

    if synth is not None:
        if raw.get("rois") is not None:
            raise ConfigError("rois must be omitted in synth mode (the fixture layout defines them)")
        rois = synth.layout.rois()
    else:
        rois = _parse_rois(raw.get("rois"))
    for i, a in enumerate(rois):
        for b in rois[i + 1 :]:
            if a.overlaps(b):
                raise ConfigError(f"overlapping metric ROIs: {a.channel!r} and {b.channel!r}")

    image = _parse_image(raw.get("image", {}))
    recognizer = _parse_recognizer(raw.get("recognizer", {}))
    ranges = _parse_ranges(raw.get("ranges", "default"))
    clean = _parse_clean(raw.get("clean", {}))
    emotion = _parse_emotion(raw.get("emotion", {}), base)
    analysis = _parse_analysis(raw.get("analysis", {}))

    return PipelineConfig(
        seed=seed,
        output_dir=output_dir,
        mode={"video": "video", "synth": "synth", "frames_dir": "frames"}[modes[0]],
        rois=rois,
        image=image,
        recognizer=recognizer,
        ranges=ranges,
        clean=clean,
        emotion=emotion,
        analysis=analysis,
        video=video,
        synth=synth,
        frames_dir=frames_dir,
        raw=raw,
    )


# --- section parsers ---------------------------------------------------------------

def _parse_video(section: Any, base: Path) -> VideoConfig:
    _check_keys(section, {"parts", "target_fps", "inset_roi", "media_tool_path"}, "video")
    parts_raw = section.get("parts")
    if not isinstance(parts_raw, list) or not parts_raw:
        raise ConfigError("video.parts must be a non-empty list")
    parts = []
    for i, part in enumerate(parts_raw):
        _check_keys(part, {"path", "trim_start", "trim_end"}, f"video.parts[{i}]")
        if "path" not in part:
            raise ConfigError(f"video.parts[{i}].path is required")
        path = _resolve(base, part["path"])
        if not path.is_file():
            raise ConfigError(f"video part does not exist: {path}")
        parts.append(_build(VideoPart, f"video.parts[{i}]",
                            path=str(path),
                            trim_start=float(part.get("trim_start", 0.0)),
                            trim_end=None if part.get("trim_end") is None else float(part["trim_end"])))
    inset = None
    if section.get("inset_roi") is not None:
        inset = _parse_roi("inset", section["inset_roi"], "video.inset_roi")
    plan = _build(PrepPlan, "video", parts=parts,
                  target_fps=_expect_int(section.get("target_fps", 30), "video.target_fps"),
                  inset_roi=inset)
    return VideoConfig(plan=plan, media_tool_path=section.get("media_tool_path"))


def _parse_synth(section: Any) -> SynthConfig:
    _check_keys(section, {
        "duration", "profile", "params", "layout", "noise", "emotion_rho",
        "emotion_cadence_ms", "assemble_video", "assemble_fps",
    }, "synth")
    params_raw = section.get("params", {})
    _check_keys(params_raw, {
        "power_high", "power_low", "period_s", "tau_s", "hr_rest",
        "hr_per_watt", "hr_noise_sd", "power_noise_sd",
    }, "synth.params")
    params = _build(TruthParams, "synth.params", **params_raw)
    layout = _parse_layout(section.get("layout"))
    noise_raw = section.get("noise", {})
    _check_keys(noise_raw, {"pixel_flip_p", "glyph_swap_p"}, "synth.noise")
    noise = _build(NoiseParams, "synth.noise", **noise_raw)
    rho = section.get("emotion_rho", 0.36)
    cfg = SynthConfig(
        duration=_expect_int(section.get("duration", 600), "synth.duration"),
        profile=str(section.get("profile", "interval")),
        params=params,
        layout=layout,
        noise=noise,
        emotion_rho=None if rho is None else float(rho),
        emotion_cadence_ms=_expect_int(section.get("emotion_cadence_ms", 1000), "synth.emotion_cadence_ms"),
        assemble_video=bool(section.get("assemble_video", False)),
        assemble_fps=_expect_int(section.get("assemble_fps", 30), "synth.assemble_fps"),
    )
    if cfg.profile not in ("interval", "steady"):
        raise ConfigError(f"synth.profile must be interval or steady, got {cfg.profile!r}")
    if cfg.duration < 60:
        raise ConfigError(f"synth.duration must be >= 60, got {cfg.duration}")
    try:
        layout.validate()
    except ValueError as exc:
        raise ConfigError(f"synth.layout: {exc}") from exc
    return cfg


def _parse_layout(section: Any) -> FixtureLayout:
    if section is None:
        return FixtureLayout()
    _check_keys(section, {"frame_w", "frame_h", "background", "ink", "margin", "gap_cells", "channels"},
                "synth.layout")
    layout = FixtureLayout(
        frame_w=_expect_int(section.get("frame_w", 480), "synth.layout.frame_w"),
        frame_h=_expect_int(section.get("frame_h", 270), "synth.layout.frame_h"),
        background=_expect_int(section.get("background", 25), "synth.layout.background"),
        ink=_expect_int(section.get("ink", 240), "synth.layout.ink"),
        margin=_expect_int(section.get("margin", 4), "synth.layout.margin"),
        gap_cells=_expect_int(section.get("gap_cells", 2), "synth.layout.gap_cells"),
    )
    if section.get("channels") is not None:
        channels: dict[str, ChannelLayout] = {}
        for name, spec in section["channels"].items():
            _check_keys(spec, {"x", "y", "w", "h", "scale"}, f"synth.layout.channels.{name}")
            roi = _parse_roi(name, spec, f"synth.layout.channels.{name}", allow_scale=True)
            channels[name] = ChannelLayout(
                roi=roi, scale=_expect_int(spec.get("scale", 5), f"synth.layout.channels.{name}.scale")
            )
        layout.channels = channels
    return layout


def _parse_rois(section: Any) -> list[RoiSpec]:
    if not isinstance(section, dict) or not section:
        raise ConfigError("rois must map at least one channel name to a rectangle")
    return [_parse_roi(name, spec, f"rois.{name}") for name, spec in section.items()]


def _parse_roi(name: str, spec: Any, where: str, allow_scale: bool = False) -> RoiSpec:
    allowed = {"x", "y", "w", "h"} | ({"scale"} if allow_scale else set())
    _check_keys(spec, allowed, where)
    for key in ("x", "y", "w", "h"):
        if key not in spec:
            raise ConfigError(f"{where}.{key} is required")
    return _build(RoiSpec, where, channel=name,
                  x=_expect_int(spec["x"], f"{where}.x"), y=_expect_int(spec["y"], f"{where}.y"),
                  w=_expect_int(spec["w"], f"{where}.w"), h=_expect_int(spec["h"], f"{where}.h"))


def _parse_image(section: Any) -> PreprocessParams:
    _check_keys(section, {
        "resize_w", "resize_h", "dpi", "sharpen_factor", "binarize_method",
        "fixed_threshold", "blur_sigma",
    }, "image")
    params = _build(PreprocessParams, "image", **section)
    if params.binarize_method not in ("otsu", "fixed"):
        raise ConfigError(f"image.binarize_method must be otsu or fixed, got {params.binarize_method!r}")
    if params.resize_w <= 0 or params.resize_h <= 0:
        raise ConfigError("image.resize_w and resize_h must be positive")
    if params.sharpen_factor < 0 or params.blur_sigma < 0:
        raise ConfigError("image.sharpen_factor and blur_sigma must be >= 0")
    return params


def _parse_recognizer(section: Any) -> RecognizerSpec:
    _check_keys(section, {"kind", "ocr_engine_path", "char_whitelist", "psm", "min_ink_fraction"},
                "recognizer")
    section = dict(section)
    engine_path = section.pop("ocr_engine_path", None)
    return _build(RecognizerSpec, "recognizer", engine_path=engine_path, **section)


def _parse_ranges(section: Any) -> dict[str, ChannelRange] | None:
    if section == "default":
        return dict(DEFAULT_RANGES)
    if section is None:
        return None
    if not isinstance(section, dict):
        raise ConfigError("ranges must be a channel -> [min, max] mapping or null")
    out = {}
    for channel, bounds in section.items():
        if not (isinstance(bounds, list) and len(bounds) == 2):
            raise ConfigError(f"ranges.{channel} must be a [min, max] pair")
        out[channel] = _build(ChannelRange, f"ranges.{channel}", channel=channel,
                              min=_expect_int(bounds[0], f"ranges.{channel}[0]"),
                              max=_expect_int(bounds[1], f"ranges.{channel}[1]"))
    return out


def _parse_clean(section: Any) -> CleanParams:
    _check_keys(section, {"z_threshold", "ema_alpha", "two_sided", "sample_std", "value_bounds"}, "clean")
    section = dict(section)
    if section.get("value_bounds") is not None:
        bounds = section["value_bounds"]
        if not (isinstance(bounds, list) and len(bounds) == 2):
            raise ConfigError("clean.value_bounds must be a [min, max] pair")
        section["value_bounds"] = (float(bounds[0]), float(bounds[1]))
    return _build(CleanParams, "clean", **section)


def _parse_emotion(section: Any, base: Path) -> EmotionConfig:
    _check_keys(section, {"path", "timestamp_column", "channel_map", "offset_ms"}, "emotion")
    path = None
    if section.get("path") is not None:
        path = _resolve(base, section["path"])
        if not path.is_file():
            raise ConfigError(f"emotion export does not exist: {path}")
    channel_map = section.get("channel_map") or dict(DEFAULT_CHANNEL_MAP)
    if not isinstance(channel_map, dict):
        raise ConfigError("emotion.channel_map must be a column -> channel mapping")
    mapping = EmotionMapping(
        timestamp_column=str(section.get("timestamp_column", "Timestamp")),
        channel_map={str(k): str(v) for k, v in channel_map.items()},
        offset_ms=_expect_int(section.get("offset_ms", 0), "emotion.offset_ms"),
    )
    return EmotionConfig(path=path, mapping=mapping)


def _parse_analysis(section: Any) -> AnalysisConfig:
    _check_keys(section, {"pairs", "window_s", "step_s", "tradeoff_pair", "ema_alpha"}, "analysis")
    pairs_raw = section.get("pairs", [["power", "valence"]])
    pairs = []
    for i, pair in enumerate(pairs_raw):
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise ConfigError(f"analysis.pairs[{i}] must be a [feature_a, feature_b] pair")
        pairs.append((str(pair[0]), str(pair[1])))
    tradeoff = section.get("tradeoff_pair", ["attention", "valence"])
    if not (isinstance(tradeoff, (list, tuple)) and len(tradeoff) == 2):
        raise ConfigError("analysis.tradeoff_pair must be a [feature_a, feature_b] pair")
    cfg = AnalysisConfig(
        pairs=pairs,
        window_s=_expect_int(section.get("window_s", 60), "analysis.window_s"),
        step_s=_expect_int(section.get("step_s", 60), "analysis.step_s"),
        tradeoff_pair=(str(tradeoff[0]), str(tradeoff[1])),
        ema_alpha=None if section.get("ema_alpha") is None else float(section["ema_alpha"]),
    )
    if cfg.window_s < 2:
        raise ConfigError("analysis.window_s must be >= 2")
    if cfg.step_s < 1:
        raise ConfigError("analysis.step_s must be >= 1")
    if cfg.ema_alpha is not None and not (0 < cfg.ema_alpha <= 1):
        raise ConfigError("analysis.ema_alpha must lie in (0, 1]")
    return cfg


# --- helpers --------------------------------------------------------------------------

def _check_keys(section: Any, allowed: set[str], where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _expect_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    return int(value)


def _resolve(base: Path, value: Any) -> Path:
    p = Path(str(value))
    return p if p.is_absolute() else base / p


def _build(cls, where: str, **kwargs):
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
