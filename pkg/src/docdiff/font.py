"""Built-in 5x7 bitmap font used by the synthetic corpus generator.

Glyphs are stored at full 5-column width and trimmed to their inked columns
when rendered, so inter-letter gaps are always exactly one font column.
Lower-case input is drawn with the upper-case glyphs.
"""

from __future__ import annotations

import numpy as np

GLYPH_ROWS = 7

_GLYPHS = {
    "A": [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"],
    "B": ["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."],
    "C": [".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."],
    "D": ["###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."],
    "E": ["#####", "#....", "#....", "####.", "#....", "#....", "#####"],
    "F": ["#####", "#....", "#....", "####.", "#....", "#....", "#...."],
    "G": [".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"],
    "H": ["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"],
    "I": ["###", ".#.", ".#.", ".#.", ".#.", ".#.", "###"],
    "J": ["..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."],
    "K": ["#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"],
    "L": ["#....", "#....", "#....", "#....", "#....", "#....", "#####"],
    "M": ["#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"],
    "N": ["#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"],
    "O": [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
    "P": ["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."],
    "Q": [".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"],
    "R": ["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"],
    "S": [".####", "#....", "#....", ".###.", "....#", "....#", "####."],
    "T": ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."],
    "U": ["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
    "V": ["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."],
    "W": ["#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."],
    "X": ["#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"],
    "Y": ["#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."],
    "Z": ["#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"],
    "0": [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."],
    "1": [".#.", "##.", ".#.", ".#.", ".#.", ".#.", "###"],
    "2": [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"],
    "3": ["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."],
    "4": ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."],
    "5": ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."],
    "6": ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."],
    "7": ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."],
    "8": [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."],
    "9": [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."],
    ".": [".", ".", ".", ".", ".", ".", "#"],
    ",": ["..", "..", "..", "..", "..", ".#", "#."],
    "/": ["....#", "...#.", "...#.", "..#..", ".#...", ".#...", "#...."],
    "-": ["...", "...", "...", "###", "...", "...", "..."],
    ":": [".", "#", ".", ".", ".", "#", "."],
    "'": ["#", "#", ".", ".", ".", ".", "."],
    "%": ["##..#", "##.#.", "...#.", "..#..", ".#...", ".#.##", "#..##"],
}


def _to_array(rows: list[str]) -> np.ndarray:
    a = np.array([[c == "#" for c in row] for row in rows], dtype=bool)
    cols = np.flatnonzero(a.any(axis=0))
    return a[:, cols[0]:cols[-1] + 1]


GLYPHS: dict[str, np.ndarray] = {ch: _to_array(rows) for ch, rows in _GLYPHS.items()}
CHARSET = frozenset(GLYPHS) | frozenset(c.lower() for c in GLYPHS if c.isalpha())


def glyph(ch: str) -> np.ndarray:
    try:
        return GLYPHS[ch.upper()]
    except KeyError:
        raise ValueError(f"no glyph for {ch!r}") from None


def glyph_distance(a: str, b: str) -> int:
    """Pixel Hamming distance between two glyphs left-aligned in a 5x7 cell."""
    ga, gb = np.zeros((GLYPH_ROWS, 5), bool), np.zeros((GLYPH_ROWS, 5), bool)
    x, y = glyph(a), glyph(b)
    ga[:, :x.shape[1]] = x
    gb[:, :y.shape[1]] = y
    return int((ga ^ gb).sum())


def text_width(text: str, scale: int) -> int:
    """Rendered width in pixels, one font column between glyphs."""
    cols = sum(glyph(c).shape[1] for c in text) + max(0, len(text) - 1)
    return cols * scale


def render_text(canvas: np.ndarray, text: str, x: int, y: int, scale: int,
                ink: int = 0) -> list[tuple[int, int, int, int]]:
    """Draw ``text`` with its top-left at (x, y); returns per-character (x, y, w, h) boxes."""
    boxes = []
    cx = x
    for ch in text:
        g = glyph(ch)
        big = np.kron(g, np.ones((scale, scale), dtype=bool))
        h, w = big.shape
        region = canvas[y:y + h, cx:cx + w]
        region[big] = ink
        rows = np.flatnonzero(g.any(axis=1))
        boxes.append((cx, y + rows[0] * scale, w, (rows[-1] - rows[0] + 1) * scale))
        cx += w + scale
    return boxes
