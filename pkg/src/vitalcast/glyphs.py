"""Shipped 7x10 bitmap digit font.

The same bitmaps back both sides of the synthetic round trip: the fixture
renderer stamps them onto frames and the template recognizer matches against
them, so ground truth is shared exactly.
"""

from __future__ import annotations

import numpy as np

GLYPH_W = 7
GLYPH_H = 10

_ROWS = {
    "0": (
        ".#####.",
        "#.....#",
        "#....##",
        "#...#.#",
        "#..#..#",
        "#.#...#",
        "##....#",
        "#.....#",
        "#.....#",
        ".#####.",
    ),
    "1": (
        "...#...",
        "..##...",
        ".#.#...",
        "...#...",
        "...#...",
        "...#...",
        "...#...",
        "...#...",
        "...#...",
        ".#####.",
    ),
    "2": (
        ".#####.",
        "#.....#",
        "......#",
        "......#",
        ".....#.",
        "....#..",
        "...#...",
        "..#....",
        ".#.....",
        "#######",
    ),
    "3": (
        ".#####.",
        "#.....#",
        "......#",
        "......#",
        "..####.",
        "......#",
        "......#",
        "......#",
        "#.....#",
        ".#####.",
    ),
    "4": (
        "....##.",
        "...#.#.",
        "..#..#.",
        ".#...#.",
        "#....#.",
        "#######",
        ".....#.",
        ".....#.",
        ".....#.",
        ".....#.",
    ),
    "5": (
        "#######",
        "#......",
        "#......",
        "#####..",
        ".....#.",
        "......#",
        "......#",
        "......#",
        "#.....#",
        ".#####.",
    ),
    "6": (
        "..####.",
        ".#.....",
        "#......",
        "#......",
        "######.",
        "#.....#",
        "#.....#",
        "#.....#",
        "#.....#",
        ".#####.",
    ),
    "7": (
        "#######",
        "......#",
        ".....#.",
        ".....#.",
        "....#..",
        "....#..",
        "...#...",
        "...#...",
        "..#....",
        "..#....",
    ),
    "8": (
        ".#####.",
        "#.....#",
        "#.....#",
        "#.....#",
        ".#####.",
        "#.....#",
        "#.....#",
        "#.....#",
        "#.....#",
        ".#####.",
    ),
    "9": (
        ".#####.",
        "#.....#",
        "#.....#",
        "#.....#",
        ".######",
        "......#",
        "......#",
        "......#",
        ".....#.",
        ".####..",
    ),
}


def glyph_bitmap(digit: str) -> np.ndarray:
    """Boolean (10, 7) bitmap of one digit; True marks ink."""
    rows = _ROWS[digit]
    return np.array([[c == "#" for c in row] for row in rows], dtype=bool)


def digit_templates() -> dict[str, np.ndarray]:
    """Fresh digit -> bitmap mapping in '0'..'9' order."""
    return {d: glyph_bitmap(d) for d in "0123456789"}
