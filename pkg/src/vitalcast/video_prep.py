"""Source-video preparation through an external FFmpeg-compatible CLI.

All codec work happens in one media tool invoked as a subprocess with explicit
argument lists; nothing here decodes video in-process. The tool is discovered
from an explicit path, the ``VITALCAST_MEDIA_TOOL`` environment variable, or an
``ffmpeg`` binary on PATH. Trims are honored to the nearest frame via filter
re-encoding so concatenated parts never share frames, and extracted frames are
lossless PNGs named ``frame_%08d.png`` with the index equal to the second at
the default 1 fps sampling rate.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .errors import MediaToolFailure, MediaToolMissing, RoiOutOfBounds, UnreadableVideo
from .image_ops import RoiSpec

MEDIA_TOOL_ENV_VAR = "VITALCAST_MEDIA_TOOL"
FRAME_PATTERN = "frame_%08d.png"

_DURATION_RE = re.compile(r"Duration:\s*(\d+):(\d+):(\d+(?:\.\d+)?)")
_VIDEO_LINE_RE = re.compile(r"Stream.*Video:")
_SIZE_RE = re.compile(r"(\d{2,5})x(\d{2,5})")
_FPS_RE = re.compile(r"(\d+(?:\.\d+)?)\s*fps")
_TBR_RE = re.compile(r"(\d+(?:\.\d+)?)\s*tbr")


@dataclass(frozen=True)
class VideoPart:
    """One source file with its trim window; ``trim_end`` of None means end of file."""

    path: str | Path
    trim_start: float = 0.0
    trim_end: float | None = None

    def __post_init__(self) -> None:
        if self.trim_start < 0:
            raise ValueError(f"trim_start must be >= 0, got {self.trim_start}")
        if self.trim_end is not None and self.trim_end <= self.trim_start:
            raise ValueError(
                f"trim_end {self.trim_end} must exceed trim_start {self.trim_start}"
            )


@dataclass(frozen=True)
class VideoMeta:
    duration: float
    fps: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.duration <= 0 or self.fps <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError(f"video metadata must be strictly positive: {self}")


@dataclass
class PrepPlan:
    """Ordered parts to trim, fps-normalize and concatenate into one video."""

    parts: list[VideoPart]
    target_fps: int = 30
    inset_roi: RoiSpec | None = None

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValueError("plan needs at least one part")
        if self.target_fps <= 0:
            raise ValueError(f"target_fps must be positive, got {self.target_fps}")


def resolve_media_tool(explicit: str | None = None) -> str:
    """Locate the media tool binary or raise :class:`MediaToolMissing`."""
    candidate = explicit or os.environ.get(MEDIA_TOOL_ENV_VAR) or shutil.which("ffmpeg")
    if not candidate or not Path(candidate).exists():
        raise MediaToolMissing(
            "no media tool found; set media_tool_path or VITALCAST_MEDIA_TOOL"
        )
    return str(candidate)


def media_tool_version(tool: str | None = None) -> str:
    """First line of the tool's -version output (for the run manifest)."""
    resolved = resolve_media_tool(tool)
    proc = _run(resolved, ["-version"], check=False)
    for stream in (proc.stdout, proc.stderr):
        for line in stream.splitlines():
            if line.strip():
                return line.strip()
    return "unknown"


def run_media_tool(tool: str, args: list[str]) -> subprocess.CompletedProcess:
    """Invoke the tool, raising :class:`MediaToolFailure` on a nonzero exit."""
    proc = _run(tool, args, check=False)
    if proc.returncode != 0:
        raise MediaToolFailure(
            f"media tool exited {proc.returncode}: {proc.stderr.strip()[-800:]}"
        )
    return proc


def probe(path: str | Path, media_tool: str | None = None) -> VideoMeta:
    """Read duration, fps and resolution by parsing the tool's ``-i`` banner.

    Raises:
        MediaToolMissing: the tool cannot be found or executed.
        UnreadableVideo: the file is missing or the tool reports no video stream.
    """
    tool = resolve_media_tool(media_tool)
    path = Path(path)
    if not path.exists():
        raise UnreadableVideo(f"video does not exist: {path}")
    # with no output file the tool exits nonzero after printing the banner
    proc = _run(tool, ["-hide_banner", "-i", str(path)], check=False)
    banner = proc.stderr + "\n" + proc.stdout
    duration_match = _DURATION_RE.search(banner)
    video_line = next((ln for ln in banner.splitlines() if _VIDEO_LINE_RE.search(ln)), None)
    if not duration_match or video_line is None:
        raise UnreadableVideo(f"cannot read {path}: {proc.stderr.strip()[-300:]}")
    hours, minutes, seconds = duration_match.groups()
    duration = int(hours) * 3600 + int(minutes) * 60 + float(seconds)
    size_match = _SIZE_RE.search(video_line)
    fps_match = _FPS_RE.search(video_line) or _TBR_RE.search(video_line)
    if not size_match or not fps_match:
        raise UnreadableVideo(f"cannot parse video stream line of {path}: {video_line!r}")
    try:
        return VideoMeta(
            duration=duration,
            fps=float(fps_match.group(1)),
            width=int(size_match.group(1)),
            height=int(size_match.group(2)),
        )
    except ValueError as exc:
        raise UnreadableVideo(f"degenerate metadata for {path}: {exc}") from exc


def normalize_and_concat(
    plan: PrepPlan, out: str | Path, media_tool: str | None = None
) -> VideoMeta:
    """Trim each part, normalize all parts to the target fps, and concatenate.

    A single filter-graph invocation re-encodes everything, so trim boundaries
    are frame-accurate and no frame is shared between adjacent parts. The
    output duration must land within one frame period (plus the 10 ms probe
    resolution) of the summed trim windows, otherwise the run is rejected.
    """
    tool = resolve_media_tool(media_tool)
    metas = [probe(part.path, tool) for part in plan.parts]
    expected = 0.0
    for part, meta in zip(plan.parts, metas):
        end = part.trim_end if part.trim_end is not None else meta.duration
        expected += end - part.trim_start
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    chains = []
    for i, part in enumerate(plan.parts):
        trim = f"trim=start={part.trim_start:g}"
        if part.trim_end is not None:
            trim += f":end={part.trim_end:g}"
        chains.append(f"[{i}:v]{trim},setpts=PTS-STARTPTS,fps={plan.target_fps}[v{i}]")
    labels = "".join(f"[v{i}]" for i in range(len(plan.parts)))
    graph = ";".join(chains) + f";{labels}concat=n={len(plan.parts)}:v=1:a=0[vout]"
    args: list[str] = ["-y"]
    for part in plan.parts:
        args += ["-i", str(part.path)]
    args += ["-filter_complex", graph, "-map", "[vout]", str(out)]
    run_media_tool(tool, args)
    meta = probe(out, tool)
    tolerance = 1.0 / plan.target_fps + 0.01
    if abs(meta.duration - expected) > tolerance:
        raise MediaToolFailure(
            f"concat drift: expected {expected:.3f} s, tool produced {meta.duration:.3f} s"
        )
    return meta


def crop_video(
    path: str | Path, roi: RoiSpec, out: str | Path, media_tool: str | None = None
) -> VideoMeta:
    """Crop a video to the ROI rectangle (duration and fps unchanged).

    Raises:
        RoiOutOfBounds: the rectangle does not fit inside the frame.
    """
    tool = resolve_media_tool(media_tool)
    meta = probe(path, tool)
    if roi.x + roi.w > meta.width or roi.y + roi.h > meta.height:
        raise RoiOutOfBounds(
            f"roi {roi.channel!r} ({roi.x},{roi.y},{roi.w}x{roi.h}) "
            f"exceeds frame {meta.width}x{meta.height}"
        )
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    run_media_tool(
        tool,
        ["-y", "-i", str(path), "-vf", f"crop={roi.w}:{roi.h}:{roi.x}:{roi.y}", str(out)],
    )
    return probe(out, tool)


def extract_frames(
    path: str | Path,
    rate: float = 1.0,
    out_dir: str | Path = "frames",
    media_tool: str | None = None,
) -> list[tuple[float, Path]]:
    """Sample frames at the given rate into ``out_dir`` as lossless PNGs.

    Returns (timestamp, path) pairs ordered by time; at the default 1 fps the
    file index is the second. The produced count must match
    ``duration * rate`` within two frames.
    """
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    tool = resolve_media_tool(media_tool)
    meta = probe(path, tool)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run_media_tool(
        tool,
        ["-y", "-i", str(path), "-vf", f"fps={rate:g}", "-start_number", "0",
         str(out_dir / FRAME_PATTERN)],
    )
    frames = sorted(out_dir.glob("frame_*.png"))
    if abs(len(frames) - meta.duration * rate) > 2:
        raise MediaToolFailure(
            f"frame extraction produced {len(frames)} frames for "
            f"{meta.duration:.2f} s at {rate} fps"
        )
    return [(int(f.stem.split("_")[1]) / rate, f) for f in frames]


def _run(tool: str, args: list[str], check: bool) -> subprocess.CompletedProcess:
    try:
        return subprocess.run([tool, *args], capture_output=True, text=True, check=check)
    except FileNotFoundError as exc:
        raise MediaToolMissing(f"cannot execute media tool {tool!r}") from exc
