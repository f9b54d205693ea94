"""Sanity checks on the shipped digit font."""

from vitalcast.glyphs import GLYPH_H, GLYPH_W, digit_templates


def test_ten_digits_with_expected_shape():
    templates = digit_templates()
    assert sorted(templates) == [str(d) for d in range(10)]
    for bitmap in templates.values():
        assert bitmap.shape == (GLYPH_H, GLYPH_W)
        assert bitmap.dtype == bool
        assert bitmap.any()


def test_digits_are_mutually_distinct():
    templates = digit_templates()
    digits = sorted(templates)
    for i, a in enumerate(digits):
        for b in digits[i + 1 :]:
            hamming = int((templates[a] ^ templates[b]).sum())
            assert hamming >= 6, f"{a} vs {b} differ in only {hamming} pixels"


def test_templates_are_fresh_copies():
    a = digit_templates()
    a["0"][:] = False
    assert digit_templates()["0"].any()
