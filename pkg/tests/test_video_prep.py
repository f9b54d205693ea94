"""Media-tool orchestration tests.

These run against a real FFmpeg-compatible CLI: a genuine ffmpeg when PATH has
one, otherwise the OpenCV-backed shim in tests/tools. Either way the videos,
durations and frame counts are real, produced by actual encode/decode.
"""

from __future__ import annotations

import pytest

from vitalcast.errors import MediaToolMissing, RoiOutOfBounds, UnreadableVideo
from vitalcast.image_ops import RoiSpec, load_gray, preprocess_roi
from vitalcast.ocr import RecognizerSpec, recognize
from vitalcast.synth import FixtureLayout, assemble_video, generate_truth, render_frames
from vitalcast.video_prep import (
    PrepPlan,
    VideoPart,
    crop_video,
    extract_frames,
    media_tool_version,
    normalize_and_concat,
    probe,
    resolve_media_tool,
)


@pytest.fixture(scope="module")
def video600(tmp_path_factory, fixture600, media_tool):
    """600 s 30 fps video assembled from the session fixture's 1 Hz frames."""
    out = tmp_path_factory.mktemp("video600") / "full.mp4"
    assemble_video(fixture600["dir"] / "frames", out, fps=30, media_tool=media_tool)
    return out


@pytest.fixture(scope="module")
def video60_at_60fps(tmp_path_factory, media_tool):
    base = tmp_path_factory.mktemp("video60")
    truth = generate_truth(60, "steady", seed=17)
    render_frames(truth, out_dir=base)
    out = base / "clip60fps.mp4"
    assemble_video(base / "frames", out, fps=60, media_tool=media_tool)
    return out


# --- discovery ------------------------------------------------------------------------

def test_resolve_prefers_explicit_path(media_tool):
    assert resolve_media_tool(media_tool) == media_tool


def test_resolve_env_variable(media_tool, monkeypatch):
    monkeypatch.delenv("VITALCAST_MEDIA_TOOL", raising=False)
    monkeypatch.setenv("VITALCAST_MEDIA_TOOL", media_tool)
    assert resolve_media_tool() == media_tool


def test_missing_tool(monkeypatch):
    monkeypatch.delenv("VITALCAST_MEDIA_TOOL", raising=False)
    monkeypatch.setattr("shutil.which", lambda name: None)
    with pytest.raises(MediaToolMissing):
        resolve_media_tool()
    with pytest.raises(MediaToolMissing):
        resolve_media_tool("/no/such/tool")


def test_version_line(media_tool):
    assert media_tool_version(media_tool)


# --- probe ----------------------------------------------------------------------------

def test_probe_fixture_metadata(video600, media_tool):
    meta = probe(video600, media_tool)
    assert meta.duration == pytest.approx(600.0, abs=1.0 / 30.0)
    assert meta.fps == pytest.approx(30.0, abs=0.1)
    assert (meta.width, meta.height) == (480, 270)


def test_probe_zero_byte_file(tmp_path, media_tool):
    empty = tmp_path / "zero.mp4"
    empty.write_bytes(b"")
    with pytest.raises(UnreadableVideo):
        probe(empty, media_tool)


def test_probe_missing_path(tmp_path, media_tool):
    with pytest.raises(UnreadableVideo):
        probe(tmp_path / "missing.mp4", media_tool)


# --- normalize + concat ------------------------------------------------------------------

def test_two_trimmed_parts_sum_to_full_duration(video600, tmp_path, media_tool):
    plan = PrepPlan(
        parts=[VideoPart(video600, 0, 300), VideoPart(video600, 300, 600)],
        target_fps=30,
    )
    meta = normalize_and_concat(plan, tmp_path / "concat.mp4", media_tool)
    assert meta.duration == pytest.approx(600.0, abs=1.0 / 30.0 + 0.01)
    assert meta.fps == pytest.approx(30.0, abs=0.1)


def test_mixed_fps_parts_normalize_to_target(video60_at_60fps, tmp_path, media_tool):
    clip30 = tmp_path / "clip30.mp4"
    plan30 = PrepPlan(parts=[VideoPart(video60_at_60fps, 0, 30)], target_fps=30)
    normalize_and_concat(plan30, clip30, media_tool)

    plan = PrepPlan(parts=[VideoPart(video60_at_60fps), VideoPart(clip30)], target_fps=30)
    meta = normalize_and_concat(plan, tmp_path / "mixed.mp4", media_tool)
    assert meta.fps == pytest.approx(30.0, abs=0.1)
    assert meta.duration == pytest.approx(90.0, abs=1.0 / 30.0 + 0.01)


def test_single_part_without_trim_preserves_meta(video60_at_60fps, tmp_path, media_tool):
    source = probe(video60_at_60fps, media_tool)
    plan = PrepPlan(parts=[VideoPart(video60_at_60fps)], target_fps=60)
    meta = normalize_and_concat(plan, tmp_path / "same.mp4", media_tool)
    assert meta.duration == pytest.approx(source.duration, abs=1.0 / 60.0 + 0.01)
    assert meta.fps == pytest.approx(source.fps, abs=0.1)
    assert (meta.width, meta.height) == (source.width, source.height)


def test_part_validation():
    with pytest.raises(ValueError):
        VideoPart("x.mp4", trim_start=5.0, trim_end=5.0)
    with pytest.raises(ValueError):
        VideoPart("x.mp4", trim_start=-1.0)
    with pytest.raises(ValueError):
        PrepPlan(parts=[])


# --- crop -----------------------------------------------------------------------------

def test_crop_full_frame_is_identity(video60_at_60fps, tmp_path, media_tool):
    meta = crop_video(video60_at_60fps, RoiSpec("full", 0, 0, 480, 270),
                      tmp_path / "full.mp4", media_tool)
    assert (meta.width, meta.height) == (480, 270)


def test_crop_inset(video60_at_60fps, tmp_path, media_tool):
    source = probe(video60_at_60fps, media_tool)
    meta = crop_video(video60_at_60fps, RoiSpec("inset", 0, 0, 320, 240),
                      tmp_path / "inset.mp4", media_tool)
    assert (meta.width, meta.height) == (320, 240)
    assert meta.duration == pytest.approx(source.duration, abs=1.0 / 30.0 + 0.01)


def test_crop_out_of_bounds(video60_at_60fps, tmp_path, media_tool):
    with pytest.raises(RoiOutOfBounds):
        crop_video(video60_at_60fps, RoiSpec("oob", 400, 0, 200, 100),
                   tmp_path / "oob.mp4", media_tool)


# --- frame extraction ---------------------------------------------------------------------

def test_extract_600_frames_gap_free(video600, tmp_path, media_tool):
    frames = extract_frames(video600, 1.0, tmp_path / "frames", media_tool)
    assert len(frames) == 600
    timestamps = [t for t, _ in frames]
    assert timestamps == list(range(600))  # strictly increasing, gap-free at 1 fps
    assert frames[7][1].name == "frame_00000007.png"


def test_extract_rerun_is_deterministic(video60_at_60fps, tmp_path, media_tool):
    first = extract_frames(video60_at_60fps, 1.0, tmp_path / "a", media_tool)
    second = extract_frames(video60_at_60fps, 1.0, tmp_path / "b", media_tool)
    assert [t for t, _ in first] == [t for t, _ in second]
    assert [p.name for _, p in first] == [p.name for _, p in second]


def test_extract_fractional_duration_within_one_frame(tmp_path, media_tool):
    from vitalcast.video_prep import run_media_tool

    base = tmp_path / "frac"
    truth = generate_truth(181, "steady", seed=19)
    render_frames(truth, out_dir=base)
    half_second = base / "half.mp4"
    # 181 frames consumed at 2 fps make a 90.5 s clip
    run_media_tool(media_tool, [
        "-y", "-framerate", "2", "-start_number", "0",
        "-i", str(base / "frames" / "frame_%08d.png"), str(half_second),
    ])
    clip = probe(half_second, media_tool)
    assert clip.duration == pytest.approx(90.5, abs=0.51)
    frames = extract_frames(half_second, 1.0, tmp_path / "ff", media_tool)
    assert len(frames) in (90, 91)


@pytest.mark.slow
def test_video_roundtrip_preserves_readable_overlays(video600, fixture600, tmp_path, media_tool):
    """Frames that survive encode/decode still OCR to the ground truth."""
    frames = extract_frames(video600, 1.0, tmp_path / "frames", media_tool)
    truth = fixture600["truth"]
    layout = FixtureLayout()
    for t in (3, 77, 240, 599):
        frame = load_gray(frames[t][1])
        for channel, values in (("heart_rate", truth.hr), ("power", truth.power)):
            processed = preprocess_roi(frame, layout.channels[channel].roi)
            raw, _ = recognize(processed, RecognizerSpec())
            assert raw == str(int(values[t])), f"t={t} {channel}"
