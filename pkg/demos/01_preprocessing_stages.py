"""Walk a heart-rate readout through every preprocessing stage.

Renders a frame with "142" in the heart-rate box, then applies the chain one
stage at a time (crop -> resize -> sharpen -> binarize -> blur), saving a PNG
after each stage so you can eyeball what each step contributes.

Run:  python demos/01_preprocessing_stages.py
"""

from pathlib import Path

import numpy as np

from vitalcast import (
    GrayImage,
    PreprocessParams,
    RecognizerSpec,
    binarize,
    crop,
    gaussian_blur,
    otsu_threshold,
    recognize,
    resize,
    save_png,
    sharpen,
)
from vitalcast.glyphs import digit_templates
from vitalcast.synth import FixtureLayout, render_value

out_dir = Path("demo_output/01_preprocessing")
out_dir.mkdir(parents=True, exist_ok=True)

# A frame the way the fixture renderer would draw it: bright digits, dark backdrop.
layout = FixtureLayout()
canvas = np.full((layout.frame_h, layout.frame_w), layout.background, dtype=np.uint8)
render_value(canvas, 142, layout.channels["heart_rate"], layout.ink, layout.margin,
             digit_templates(), gap_cells=layout.gap_cells)
frame = GrayImage(canvas)
save_png(frame, out_dir / "stage0_frame.png")

params = PreprocessParams()
roi = layout.channels["heart_rate"].roi
print(f"ROI for heart_rate: {roi.w}x{roi.h} at ({roi.x},{roi.y})")

cropped = crop(frame, roi)
save_png(cropped, out_dir / "stage1_crop.png")
print(f"stage 1 crop     -> {cropped.width}x{cropped.height}")

resized = resize(cropped, params.resize_w, params.resize_h, dpi=params.dpi)
save_png(resized, out_dir / "stage2_resize.png")
print(f"stage 2 resize   -> {resized.width}x{resized.height} at {resized.dpi:.0f} dpi")

sharpened = sharpen(resized, params.sharpen_factor)
save_png(sharpened, out_dir / "stage3_sharpen.png")
print(f"stage 3 sharpen  -> unsharp factor {params.sharpen_factor}")

threshold = otsu_threshold(sharpened)
binary = binarize(sharpened, params.binarize_method, params.fixed_threshold)
save_png(binary.to_gray(), out_dir / "stage4_binarize.png")
print(f"stage 4 binarize -> otsu threshold {threshold}")

blurred = gaussian_blur(binary.to_gray(dpi=float(params.dpi)), params.blur_sigma)
save_png(blurred, out_dir / "stage5_blur.png")
print(f"stage 5 blur     -> sigma {params.blur_sigma}")

raw, confidence = recognize(blurred, RecognizerSpec(kind="template"))
print(f"\ntemplate recognizer reads: {raw!r} (confidence {confidence:.3f})")
print(f"stage images in {out_dir}/")
