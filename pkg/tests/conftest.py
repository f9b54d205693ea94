"""Shared fixtures: media tool discovery and session-wide synthetic fixtures."""

from __future__ import annotations

import shutil
import stat
from pathlib import Path

import numpy as np
import pytest

from vitalcast.image_ops import GrayImage
from vitalcast.synth import FixtureLayout, generate_truth, render_frames, render_value
from vitalcast.glyphs import digit_templates

MINI_TOOL = Path(__file__).parent / "tools" / "mini_ffmpeg.py"


@pytest.fixture(scope="session")
def media_tool() -> str:
    """Path of an FFmpeg-compatible CLI: a real ffmpeg if present, else the
    OpenCV-backed shim shipped with the test suite."""
    real = shutil.which("ffmpeg")
    if real:
        return real
    pytest.importorskip("cv2", reason="no ffmpeg on PATH and no OpenCV for the shim")
    MINI_TOOL.chmod(MINI_TOOL.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return str(MINI_TOOL)


@pytest.fixture(scope="session")
def truth600():
    return generate_truth(600, profile="interval", seed=42)


@pytest.fixture(scope="session")
def fixture600(tmp_path_factory, truth600):
    """600 s interval fixture rendered once per session (noise off)."""
    out = tmp_path_factory.mktemp("fixture600")
    frames, truth_csv = render_frames(truth600, out_dir=out)
    return {"dir": out, "frames": frames, "truth_csv": truth_csv, "truth": truth600}


def render_readout(text: str, channel: str = "heart_rate", layout: FixtureLayout | None = None) -> GrayImage:
    """Frame-sized canvas with `text` stamped into one channel's ROI."""
    layout = layout or FixtureLayout()
    canvas = np.full((layout.frame_h, layout.frame_w), layout.background, dtype=np.uint8)
    render_value(canvas, 0, layout.channels[channel], layout.ink, layout.margin,
                 digit_templates(), swapped=text, gap_cells=layout.gap_cells)
    return GrayImage(canvas)


def assert_tree_bytes_equal(a: Path, b: Path) -> None:
    """Recursively compare two artifact trees byte for byte."""
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b, f"file sets differ: {set(files_a) ^ set(files_b)}"
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), f"bytes differ: {rel}"
