#!/usr/bin/env python3
"""Minimal FFmpeg-compatible CLI backed by OpenCV, for exercising the media-tool
subprocess contract in environments without an ffmpeg binary.

Supports exactly the invocation surface the pipeline uses:

  * ``-i <video>`` with no output: print a metadata banner to stderr, exit 1
  * ``-version``: print a version line
  * ``-filter_complex "[0:v]trim=..,setpts=..,fps=N[v0];..;[v0][v1]concat=..[vout]" -map [vout] out``
  * ``-vf crop=w:h:x:y out`` and ``-vf fps=R -start_number 0 dir/frame_%08d.png``
  * ``-framerate R -start_number 0 -i dir/frame_%08d.png -r R out`` (image sequence in)

Streams are processed lazily so hour-long fixtures do not hold frames in memory.
Conftest prefers a real ffmpeg on PATH; this tool is the hermetic fallback.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

VERSION_LINE = "ffmpeg version mini-1.0 (vitalcast test shim, OpenCV backend)"
EPS = 1e-9


@dataclass
class Stream:
    frames: "object"   # iterator of BGR ndarrays
    fps: float
    count: int
    width: int
    height: int

    @property
    def duration(self) -> float:
        return self.count / self.fps


def fail(message: str, code: int = 1) -> "NoReturn":  # noqa: F821
    print(message, file=sys.stderr)
    sys.exit(code)


# --- sources -------------------------------------------------------------------------

def open_video(path: str) -> Stream:
    if not Path(path).exists():
        fail(f"{path}: No such file or directory")
    cap = cv2.VideoCapture(path)
    if not cap.isOpened():
        cap.release()
        fail(f"{path}: Invalid data found when processing input")
    fps = cap.get(cv2.CAP_PROP_FPS)
    count = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
    width = int(cap.get(cv2.CAP_PROP_FRAME_WIDTH))
    height = int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
    if fps <= 0 or count <= 0 or width <= 0 or height <= 0:
        cap.release()
        fail(f"{path}: Invalid data found when processing input")

    def frames():
        try:
            while True:
                ok, frame = cap.read()
                if not ok:
                    break
                yield frame
        finally:
            cap.release()

    return Stream(frames(), fps, count, width, height)


def open_image_sequence(pattern: str, framerate: float, start_number: int) -> Stream:
    directory = Path(pattern).parent
    name_re = re.compile(re.escape(Path(pattern).name).replace(r"%08d", r"(\d{8})"))
    indexed = []
    for candidate in sorted(directory.glob("*")):
        match = name_re.fullmatch(candidate.name)
        if match:
            indexed.append((int(match.group(1)), candidate))
    indexed = [(i, p) for i, p in sorted(indexed) if i >= start_number]
    if not indexed:
        fail(f"{pattern}: No such file or directory")
    first = cv2.imread(str(indexed[0][1]))
    if first is None:
        fail(f"{indexed[0][1]}: Invalid data found when processing input")
    height, width = first.shape[:2]

    def frames():
        for _, path in indexed:
            frame = cv2.imread(str(path))
            if frame is None:
                fail(f"{path}: Invalid data found when processing input")
            yield frame

    return Stream(frames(), framerate, len(indexed), width, height)


# --- filters -------------------------------------------------------------------------

def apply_trim(stream: Stream, start: float, end: float | None) -> Stream:
    first = math.ceil(start * stream.fps - EPS)
    last = stream.count if end is None else min(stream.count, math.ceil(end * stream.fps - EPS))
    first = max(0, min(first, stream.count))
    last = max(first, last)

    def frames():
        for i, frame in enumerate(stream.frames):
            if i >= last:
                break
            if i >= first:
                yield frame

    return Stream(frames(), stream.fps, last - first, stream.width, stream.height)


def apply_fps(stream: Stream, rate: float) -> Stream:
    if abs(rate - stream.fps) < EPS:
        return stream
    out_count = math.ceil(stream.count * rate / stream.fps - EPS)

    def frames():
        source = stream.frames
        held = None
        held_idx = -1
        for j in range(out_count):
            want = min(int(j * stream.fps / rate + EPS), stream.count - 1)
            while held_idx < want:
                held = next(source)
                held_idx += 1
            yield held

    return Stream(frames(), rate, out_count, stream.width, stream.height)


def apply_crop(stream: Stream, w: int, h: int, x: int, y: int) -> Stream:
    if x + w > stream.width or y + h > stream.height:
        fail(f"crop area {w}x{h}+{x}+{y} exceeds frame {stream.width}x{stream.height}")

    def frames():
        for frame in stream.frames:
            yield frame[y : y + h, x : x + w]

    return Stream(frames(), stream.fps, stream.count, w, h)


def concat(streams: list[Stream]) -> Stream:
    fps = streams[0].fps

    def frames():
        for stream in streams:
            yield from stream.frames

    return Stream(frames(), fps, sum(s.count for s in streams),
                  streams[0].width, streams[0].height)


def parse_filter_value(text: str) -> dict[str, str]:
    return dict(part.split("=", 1) for part in text.split(":") if "=" in part)


def apply_filter_chain(stream: Stream, chain: str) -> Stream:
    for spec in chain.split(","):
        spec = spec.strip()
        if spec.startswith("trim"):
            opts = parse_filter_value(spec[len("trim=") :]) if "=" in spec else {}
            start = float(opts.get("start", 0.0))
            end = float(opts["end"]) if "end" in opts else None
            stream = apply_trim(stream, start, end)
        elif spec.startswith("setpts"):
            continue  # frame-index model: rebase is implicit
        elif spec.startswith("fps="):
            stream = apply_fps(stream, float(spec[len("fps=") :]))
        elif spec.startswith("crop="):
            w, h, x, y = (int(v) for v in spec[len("crop=") :].split(":"))
            stream = apply_crop(stream, w, h, x, y)
        else:
            fail(f"unsupported filter: {spec}")
    return stream


def apply_filter_complex(inputs: list[Stream], graph: str) -> Stream:
    labeled: dict[str, Stream] = {}
    order: list[str] = []
    for chain in graph.split(";"):
        chain = chain.strip()
        match = re.fullmatch(r"\[(\d+):v\](.*)\[(\w+)\]", chain)
        if match:
            idx, filters, label = match.groups()
            labeled[label] = apply_filter_chain(inputs[int(idx)], filters)
            continue
        match = re.fullmatch(r"((?:\[\w+\])+)concat=n=(\d+):v=1:a=0\[(\w+)\]", chain)
        if match:
            labels, n, out_label = match.groups()
            order = re.findall(r"\[(\w+)\]", labels)
            if len(order) != int(n):
                fail(f"concat label count mismatch in {chain!r}")
            labeled[out_label] = concat([labeled[name] for name in order])
            continue
        fail(f"unsupported filter_complex chain: {chain!r}")
    if "vout" not in labeled:
        fail("filter_complex graph must end in [vout]")
    return labeled["vout"]


# --- sinks ---------------------------------------------------------------------------

def write_video(stream: Stream, path: str) -> None:
    fourcc = cv2.VideoWriter_fourcc(*("MJPG" if path.endswith(".avi") else "mp4v"))
    writer = cv2.VideoWriter(path, fourcc, stream.fps, (stream.width, stream.height))
    if not writer.isOpened():
        fail(f"could not open encoder for {path}")
    written = 0
    for frame in stream.frames:
        writer.write(frame)
        written += 1
    writer.release()
    if written != stream.count:
        fail(f"short stream: expected {stream.count} frames, wrote {written}")


def write_image_sequence(stream: Stream, pattern: str, start_number: int) -> None:
    Path(pattern).parent.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(stream.frames):
        out = pattern % (start_number + i)
        if not cv2.imwrite(out, frame):
            fail(f"could not write {out}")


def print_banner(path: str, stream: Stream) -> None:
    total = stream.duration
    hours = int(total // 3600)
    minutes = int(total % 3600 // 60)
    seconds = total - hours * 3600 - minutes * 60
    fps = stream.fps
    fps_text = f"{fps:g}" if abs(fps - round(fps)) < 1e-6 else f"{fps:.2f}"
    sys.stderr.write(
        f"Input #0, mov,mp4,m4a,3gp,3g2,mj2, from '{path}':\n"
        f"  Duration: {hours:02d}:{minutes:02d}:{seconds:05.2f}, start: 0.000000, bitrate: N/A\n"
        f"  Stream #0:0: Video: mpeg4, yuv420p, {stream.width}x{stream.height}, "
        f"{fps_text} fps, {fps_text} tbr, 15360 tbn\n"
    )


# --- argument handling -----------------------------------------------------------------

def main(argv: list[str]) -> int:
    inputs: list[dict] = []
    pending: dict = {}
    vf = None
    graph = None
    out_rate = None
    out_start_number = 0
    output = None
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "-version":
            print(VERSION_LINE)
            return 0
        if tok in ("-y", "-hide_banner", "-an", "-sn"):
            i += 1
            continue
        if tok in ("-framerate", "-start_number", "-i", "-vf", "-filter_complex",
                   "-map", "-r", "-pix_fmt"):
            if i + 1 >= len(argv):
                fail(f"missing value for {tok}")
            value = argv[i + 1]
            if tok == "-framerate":
                pending["framerate"] = float(value)
            elif tok == "-start_number":
                if "-i" in argv[i:]:
                    pending["start_number"] = int(value)
                else:
                    out_start_number = int(value)
            elif tok == "-i":
                inputs.append({"path": value,
                               "framerate": pending.pop("framerate", None),
                               "start_number": pending.pop("start_number", 0)})
            elif tok == "-vf":
                vf = value
            elif tok == "-filter_complex":
                graph = value
            elif tok == "-r":
                out_rate = float(value)
            i += 2
            continue
        if tok.startswith("-"):
            fail(f"unsupported option {tok}")
        output = tok
        i += 1

    if not inputs:
        fail("no input specified")

    streams = []
    for spec in inputs:
        if "%08d" in spec["path"]:
            streams.append(open_image_sequence(spec["path"], spec["framerate"] or 25.0,
                                               spec["start_number"]))
        else:
            streams.append(open_video(spec["path"]))

    if output is None:
        print_banner(inputs[0]["path"], streams[0])
        sys.stderr.write("At least one output file must be specified\n")
        return 1

    if graph is not None:
        stream = apply_filter_complex(streams, graph)
    else:
        stream = streams[0]
        if vf is not None:
            stream = apply_filter_chain(stream, vf)
    if out_rate is not None:
        stream = apply_fps(stream, out_rate)

    if "%08d" in output:
        write_image_sequence(stream, output, out_start_number)
    else:
        write_video(stream, output)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
