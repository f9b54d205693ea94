"""Synthetic ground-truth fixtures: telemetry series and rendered overlay frames.

Because the original streams are not redistributable, every pipeline stage is
verified against generated data whose true values are known exactly. A fixture
is a per-second heart-rate/power table, a directory of frames carrying those
values as rendered digit overlays, and (optionally) an emotion export whose
valence channel is constructed to correlate with power at a chosen level.

All generation is a pure function of (parameters, seed); reruns are
byte-identical. The heart-rate response model is a first-order lag toward a
linear function of power; it exists to make plausible-looking fixtures, not as
a physiological claim.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadDuration, IoFailure
from .glyphs import GLYPH_H, GLYPH_W, digit_templates
from .image_ops import GrayImage, RoiSpec, save_png
from .ocr import DEFAULT_RANGES
from .video_prep import FRAME_PATTERN

# independent RNG streams per generation stage, combined with the fixture seed
_TRUTH_STREAM = 101
_RENDER_STREAM = 202
_EMOTION_STREAM = 303

#: digit pairs the confusable-swap noise mode exchanges
CONFUSABLE_SWAPS = {"1": "7", "7": "1"}


@dataclass(frozen=True)
class TruthParams:
    """Shape of the generated session."""

    power_high: float = 250.0
    power_low: float = 120.0
    period_s: int = 120
    tau_s: float = 30.0
    hr_rest: float = 60.0
    hr_per_watt: float = 0.4
    hr_noise_sd: float = 0.0
    power_noise_sd: float = 0.0

    def hr_target(self, power: float) -> float:
        return self.hr_rest + self.hr_per_watt * power


@dataclass
class GroundTruth:
    """Known per-second values a fixture renders and tests recover."""

    duration: int
    seed: int
    profile: str
    hr: np.ndarray      # int bpm, one per second
    power: np.ndarray   # int watts, one per second
    params: TruthParams
    emotion: dict[str, np.ndarray] | None = None


def generate_truth(
    duration: int,
    profile: str = "interval",
    seed: int = 0,
    params: TruthParams = TruthParams(),
) -> GroundTruth:
    """Generate the per-second ground-truth series.

    The interval profile is a square wave between ``power_high`` and
    ``power_low`` with the configured period (high during the first half).
    The steady profile holds ``power_high`` throughout. Heart rate follows
    ``hr[t+1] = hr[t] + (target(power[t+1]) - hr[t]) / tau`` from ``hr_rest``,
    with the displayed values rounded to whole bpm/watts. Optional Gaussian
    read noise (seeded) is added before rounding.

    Raises:
        BadDuration: duration below 60 seconds.
    """
    if duration < 60:
        raise BadDuration(f"fixture duration must be >= 60 s, got {duration}")
    if profile not in ("interval", "steady"):
        raise ValueError(f"unknown profile {profile!r}")
    t = np.arange(duration)
    if profile == "interval":
        power = np.where(t % params.period_s < params.period_s // 2, params.power_high, params.power_low)
    else:
        power = np.full(duration, params.power_high)
    hr = np.empty(duration)
    hr[0] = params.hr_rest
    for i in range(1, duration):
        hr[i] = hr[i - 1] + (params.hr_target(power[i]) - hr[i - 1]) / params.tau_s
    if params.hr_noise_sd > 0 or params.power_noise_sd > 0:
        rng = np.random.default_rng([seed, _TRUTH_STREAM])
        hr = hr + rng.normal(0.0, params.hr_noise_sd, duration) if params.hr_noise_sd > 0 else hr
        power = (
            power + rng.normal(0.0, params.power_noise_sd, duration)
            if params.power_noise_sd > 0
            else power
        )
    hr_range = DEFAULT_RANGES["heart_rate"]
    power_range = DEFAULT_RANGES["power"]
    return GroundTruth(
        duration=duration,
        seed=seed,
        profile=profile,
        hr=np.clip(np.rint(hr), hr_range.min, hr_range.max).astype(np.int64),
        power=np.clip(np.rint(power), power_range.min, power_range.max).astype(np.int64),
        params=params,
    )


# --- frame rendering ---------------------------------------------------------------

@dataclass(frozen=True)
class ChannelLayout:
    """Where one channel's readout sits and how large its digits render."""

    roi: RoiSpec
    scale: int = 5


@dataclass
class FixtureLayout:
    """Overlay geometry of rendered fixture frames.

    ``gap_cells`` is the inter-digit spacing in glyph cells; two cells keep
    digits separable even when pixel noise lands between them.
    """

    frame_w: int = 480
    frame_h: int = 270
    background: int = 25
    ink: int = 240
    margin: int = 4
    gap_cells: int = 2
    channels: dict[str, ChannelLayout] = field(default_factory=lambda: {
        "heart_rate": ChannelLayout(RoiSpec("heart_rate", 40, 30, 190, 88), scale=7),
        "power": ChannelLayout(RoiSpec("power", 260, 150, 184, 88), scale=5),
    })

    def validate(self) -> None:
        layouts = list(self.channels.values())
        for layout in layouts:
            roi = layout.roi
            if roi.x + roi.w > self.frame_w or roi.y + roi.h > self.frame_h:
                raise ValueError(f"roi {roi.channel!r} exceeds the {self.frame_w}x{self.frame_h} frame")
            if GLYPH_H * layout.scale > roi.h:
                raise ValueError(f"glyphs too tall for roi {roi.channel!r}")
        for i, a in enumerate(layouts):
            for b in layouts[i + 1 :]:
                if a.roi.overlaps(b.roi):
                    raise ValueError(f"rois {a.roi.channel!r} and {b.roi.channel!r} overlap")

    def rois(self) -> list[RoiSpec]:
        return [layout.roi for layout in self.channels.values()]


@dataclass(frozen=True)
class NoiseParams:
    """Optional degradation modes, both off by default.

    ``pixel_flip_p`` flips each frame pixel to a random intensity with the
    given probability (seeded impulse noise); ``glyph_swap_p`` renders a
    confusable partner digit (1 <-> 7) instead of the true one. Both use RNG
    streams derived from the fixture seed.
    """

    pixel_flip_p: float = 0.0
    glyph_swap_p: float = 0.0


def render_value(
    canvas: np.ndarray,
    value: int,
    layout: ChannelLayout,
    ink: int,
    margin: int,
    templates: dict[str, np.ndarray],
    swapped: str | None = None,
    gap_cells: int = 2,
) -> None:
    """Stamp a number into the layout's ROI, left-aligned and vertically centered."""
    text = swapped if swapped is not None else str(int(value))
    roi, scale = layout.roi, layout.scale
    width = len(text) * GLYPH_W * scale + (len(text) - 1) * gap_cells * scale
    if margin + width > roi.w:
        raise ValueError(f"value {text!r} does not fit roi {roi.channel!r} at scale {scale}")
    x = roi.x + margin
    y = roi.y + (roi.h - GLYPH_H * scale) // 2
    for ch in text:
        bitmap = np.repeat(np.repeat(templates[ch], scale, axis=0), scale, axis=1)
        block = canvas[y : y + GLYPH_H * scale, x : x + GLYPH_W * scale]
        block[bitmap] = ink
        x += (GLYPH_W + gap_cells) * scale


def render_frames(
    truth: GroundTruth,
    layout: FixtureLayout | None = None,
    glyphs: dict[str, np.ndarray] | None = None,
    out_dir: str | Path = "fixtures/default",
    noise: NoiseParams | None = None,
) -> tuple[list[Path], Path]:
    """Render one frame per second plus the truth CSV next to them.

    Frames land in ``<out_dir>/frames/frame_%08d.png`` with the index equal to
    the second; ``<out_dir>/truth.csv`` records ``t_seconds,hr,power``. Output
    is deterministic for a given (truth, layout, noise) including seeds.

    Returns:
        (ordered frame paths, truth CSV path)
    """
    layout = layout or FixtureLayout()
    layout.validate()
    templates = glyphs if glyphs is not None else digit_templates()
    noise = noise or NoiseParams()
    rng = np.random.default_rng([truth.seed, _RENDER_STREAM])
    out_dir = Path(out_dir)
    frames_dir = out_dir / "frames"
    try:
        frames_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create fixture directory {frames_dir}: {exc}") from exc
    values_by_channel = {"heart_rate": truth.hr, "power": truth.power}
    paths: list[Path] = []
    for t in range(truth.duration):
        canvas = np.full((layout.frame_h, layout.frame_w), layout.background, dtype=np.uint8)
        for channel, channel_layout in layout.channels.items():
            value = int(values_by_channel[channel][t])
            swapped = None
            if noise.glyph_swap_p > 0:
                digits = [
                    CONFUSABLE_SWAPS.get(d, d)
                    if d in CONFUSABLE_SWAPS and rng.random() < noise.glyph_swap_p
                    else d
                    for d in str(value)
                ]
                swapped = "".join(digits)
            render_value(canvas, value, channel_layout, layout.ink, layout.margin, templates,
                         swapped, gap_cells=layout.gap_cells)
        if noise.pixel_flip_p > 0:
            flips = rng.random(canvas.shape) < noise.pixel_flip_p
            random_levels = rng.integers(0, 256, canvas.shape).astype(np.uint8)
            canvas[flips] = random_levels[flips]
        path = frames_dir / (FRAME_PATTERN % t)
        save_png(GrayImage(canvas), path)
        paths.append(path)
    truth_csv = out_dir / "truth.csv"
    write_truth_csv(truth_csv, truth)
    return paths, truth_csv


def write_truth_csv(path: str | Path, truth: GroundTruth) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds", "hr", "power"])
        for t in range(truth.duration):
            writer.writerow([t, int(truth.hr[t]), int(truth.power[t])])


def read_truth_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read back (hr, power) arrays from a truth CSV."""
    hr: list[int] = []
    power: list[int] = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            hr.append(int(row["hr"]))
            power.append(int(row["power"]))
    return np.array(hr, dtype=np.int64), np.array(power, dtype=np.int64)


# --- emotion fixture -----------------------------------------------------------------

def generate_correlated_emotion(
    truth: GroundTruth, rho: float, seed: int | None = None
) -> dict[str, np.ndarray]:
    """Per-second emotion channels whose valence tracks power at correlation rho.

    ``valence = rho * standardize(power) + sqrt(1 - rho^2) * eps`` with seeded
    unit-normal noise, so the sample correlation converges to rho as the
    session grows. Attention decays linearly with mild noise; the seven
    discrete emotions are low-amplitude half-normal noise. If power is
    constant, valence degenerates to the noise term.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    rng = np.random.default_rng([truth.seed if seed is None else seed, _EMOTION_STREAM])
    n = truth.duration
    power = truth.power.astype(np.float64)
    std = power.std()
    standardized = (power - power.mean()) / std if std > 0 else np.zeros(n)
    eps = rng.standard_normal(n)
    valence = rho * standardized + np.sqrt(max(0.0, 1.0 - rho * rho)) * eps
    t = np.arange(n, dtype=np.float64)
    attention = 90.0 - 30.0 * t / max(1, n - 1) + rng.normal(0.0, 2.0, n)
    channels: dict[str, np.ndarray] = {
        "joy": np.abs(rng.normal(0.0, 6.0, n)),
        "anger": np.abs(rng.normal(0.0, 3.0, n)),
        "sadness": np.abs(rng.normal(0.0, 3.0, n)),
        "contempt": np.abs(rng.normal(0.0, 2.0, n)),
        "fear": np.abs(rng.normal(0.0, 2.0, n)),
        "surprise": np.abs(rng.normal(0.0, 4.0, n)),
        "disgust": np.abs(rng.normal(0.0, 2.0, n)),
        "valence": valence,
        "attention": np.clip(attention, 0.0, 100.0),
    }
    return channels


def write_emotion_export_csv(
    path: str | Path,
    emotion: dict[str, np.ndarray],
    cadence_ms: int = 1000,
) -> None:
    """Write an iMotions-style export: Timestamp in ms plus title-case channels.

    Each second's value repeats at ``cadence_ms`` spacing within that second,
    so per-second mean aggregation recovers it exactly.
    """
    if not 0 < cadence_ms <= 1000:
        raise ValueError("cadence_ms must lie in (0, 1000]")
    names = list(emotion)
    n = len(next(iter(emotion.values())))
    per_second = 1000 // cadence_ms
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Timestamp"] + [name.capitalize() for name in names])
        for t in range(n):
            for j in range(per_second):
                row: list = [t * 1000 + j * cadence_ms]
                row += [repr(float(emotion[name][t])) for name in names]
                writer.writerow(row)


# --- optional video assembly ----------------------------------------------------------

def assemble_video(
    frames_dir: str | Path,
    out_path: str | Path,
    fps: int = 30,
    media_tool: str | None = None,
) -> Path:
    """Encode a fixture's 1 Hz frames into a video at the requested fps.

    Convenience for exercising the video-preparation stage against a fixture;
    requires the external media tool.
    """
    from .video_prep import resolve_media_tool, run_media_tool

    tool = resolve_media_tool(media_tool)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    pattern = str(Path(frames_dir) / FRAME_PATTERN)
    run_media_tool(
        tool,
        ["-y", "-framerate", "1", "-start_number", "0", "-i", pattern,
         "-r", str(fps), "-pix_fmt", "yuv420p", str(out_path)],
    )
    return out_path
