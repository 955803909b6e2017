"""Adaptive pixel-by-pixel comparison of word images.

Word images are compared in ink space (ink = 255 - intensity).  The distance
between two word images counts the ink of each image that is not covered by
the 3x3 dilation ("extended image") of the other, and the adaptive distance
is its minimum over a grid of shifts and small rotations of the test word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import BothBlank, BoxOutOfBounds
from .raster import as_gray, otsu_threshold
from .segment import Box


@dataclass(frozen=True, eq=False)
class WordRaster:
    ink: np.ndarray  # uint8, 255 = full ink
    ink_sum: int

    def __post_init__(self):
        if self.ink.ndim != 2 or min(self.ink.shape) < 1:
            raise ValueError("word raster must be a non-empty 2-D array")
        if int(self.ink.sum(dtype=np.int64)) != self.ink_sum:
            raise ValueError("ink_sum does not match raster contents")

    @classmethod
    def from_ink(cls, ink) -> "WordRaster":
        a = np.asarray(ink)
        if a.dtype != np.uint8:
            if a.size and (a.min() < 0 or a.max() > 255):
                raise ValueError("ink values must lie in [0, 255]")
            a = a.astype(np.uint8)
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        return cls(a, int(a.sum(dtype=np.int64)))

    @property
    def width(self) -> int:
        return self.ink.shape[1]

    @property
    def height(self) -> int:
        return self.ink.shape[0]


@dataclass(frozen=True)
class SearchRange:
    x_min: int = -3
    x_max: int = 3
    y_min: int = -3
    y_max: int = 3
    alpha_min: float = -1.0
    alpha_max: float = 1.0
    alpha_step: float = 1.0

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max or self.alpha_min > self.alpha_max:
            raise ValueError(f"search range bounds out of order: {self}")
        if self.alpha_step <= 0:
            raise ValueError("alpha_step must be positive")

    @classmethod
    def symmetric(cls, shift: int = 3, alpha: float = 1.0, alpha_step: float = 1.0) -> "SearchRange":
        return cls(-shift, shift, -shift, shift, -alpha, alpha, alpha_step if alpha > 0 else 1.0)

    def alphas(self) -> list[float]:
        n = int(math.floor((self.alpha_max - self.alpha_min) / self.alpha_step + 1e-9))
        return [round(self.alpha_min + k * self.alpha_step, 10) for k in range(n + 1)]

    def shifts(self):
        return [(dx, dy) for dy in range(self.y_min, self.y_max + 1)
                for dx in range(self.x_min, self.x_max + 1)]


@dataclass(frozen=True)
class PixParams:
    word_pixel_coeff: float = 0.008
    range: SearchRange = field(default_factory=SearchRange)
    binary: bool = False

    def __post_init__(self):
        if self.word_pixel_coeff < 0:
            raise ValueError("word_pixel_coeff must be non-negative")


@dataclass(frozen=True)
class PixMatch:
    dist: int
    dx: int
    dy: int
    alpha: float

    @property
    def at(self) -> tuple[int, int, float]:
        return (self.dx, self.dy, self.alpha)


def crop_word(img, box: Box, binary: bool = False) -> WordRaster:
    img = as_gray(img)
    h, w = img.shape
    if not box.within(w, h):
        raise BoxOutOfBounds(f"{box} exceeds page {w}x{h}")
    sub = img[box.y:box.y1, box.x:box.x1]
    if binary:
        t = otsu_threshold(sub)
        mask = sub < t if t is not None else sub < 128
        return WordRaster.from_ink(np.where(mask, 255, 0))
    return WordRaster.from_ink(255 - sub)


def _dilate3(a: np.ndarray) -> np.ndarray:
    """3x3 max filter of the zero-padded array; output is 1 px larger on every side."""
    h, w = a.shape
    p = np.zeros((h + 4, w + 4), dtype=a.dtype)
    p[2:-2, 2:-2] = a
    out = p[0:h + 2, 0:w + 2].copy()
    for dy in range(3):
        for dx in range(3):
            np.maximum(out, p[dy:dy + h + 2, dx:dx + w + 2], out=out)
    return out


def extend_image(r: WordRaster) -> WordRaster:
    """Extended image: every pixel replaced by the max of its 3x3 neighbourhood."""
    return WordRaster.from_ink(_dilate3(r.ink)[1:-1, 1:-1])


def rotate_nearest(ink: np.ndarray, alpha: float) -> np.ndarray:
    """Nearest-neighbour rotation about the raster center onto an enlarged frame.

    Positive angles turn the content counter-clockwise; uncovered pixels are 0.
    """
    if alpha == 0:
        return ink
    h, w = ink.shape
    a = math.radians(alpha)
    c, s = math.cos(a), math.sin(a)
    w2 = max(1, math.ceil(w * abs(c) + h * abs(s) - 1e-9))
    h2 = max(1, math.ceil(w * abs(s) + h * abs(c) - 1e-9))
    yy, xx = np.mgrid[0:h2, 0:w2]
    u = xx - (w2 - 1) / 2.0
    v = yy - (h2 - 1) / 2.0
    sx = np.floor(c * u - s * v + (w - 1) / 2.0 + 0.5).astype(np.int64)
    sy = np.floor(s * u + c * v + (h - 1) / 2.0 + 0.5).astype(np.int64)
    ok = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
    out = np.zeros((h2, w2), dtype=ink.dtype)
    out[ok] = ink[sy[ok], sx[ok]]
    return out


def _half_away(v: float) -> int:
    return int(math.copysign(math.floor(abs(v) + 0.5), v))


def center_offset(m_shape, t_shape) -> tuple[int, int]:
    """Top-left of the test raster in reference coordinates when frames are centered."""
    return (_half_away((m_shape[1] - t_shape[1]) / 2.0),
            _half_away((m_shape[0] - t_shape[0]) / 2.0))


def dist_at(m: WordRaster, t: WordRaster, dx: int, dy: int, alpha: float) -> int:
    """Neighbourhood-tolerant ink distance with the test word rotated by alpha and shifted by (dx, dy)."""
    tr = rotate_nearest(t.ink, alpha)
    cx, cy = center_offset(m.ink.shape, tr.shape)
    ox, oy = cx + dx, cy + dy
    x0 = min(0, ox) - 1
    y0 = min(0, oy) - 1
    x1 = max(m.width, ox + tr.shape[1]) + 1
    y1 = max(m.height, oy + tr.shape[0]) + 1
    mc = np.zeros((y1 - y0, x1 - x0), dtype=np.int64)
    tc = np.zeros_like(mc)
    mc[-y0:-y0 + m.height, -x0:-x0 + m.width] = m.ink
    tc[oy - y0:oy - y0 + tr.shape[0], ox - x0:ox - x0 + tr.shape[1]] = tr
    om = _dilate3(mc)[1:-1, 1:-1]
    ot = _dilate3(tc)[1:-1, 1:-1]
    return int(np.maximum(0, tc - om).sum() + np.maximum(0, mc - ot).sum())


def _shift_distances(m: np.ndarray, tr: np.ndarray, xs: range, ys: range) -> np.ndarray:
    """Distances for every placement of ``tr`` with top-left at (x, y), x in xs, y in ys.

    Uses sum(max(0, a - b)) = sum(a) - sum(min(a, b)); the extended test image is
    zero outside its 1-px halo, so the reference term only needs the window.
    """
    hm, wm = m.shape
    ht, wt = tr.shape
    left = min(-1, xs[0] - 1)
    top = min(-1, ys[0] - 1)
    right = max(wm + 1, xs[-1] + wt + 1)
    bottom = max(hm + 1, ys[-1] + ht + 1)
    mc = np.zeros((bottom - top, right - left), dtype=np.uint8)
    mc[-top:-top + hm, -left:-left + wm] = m
    om = np.zeros_like(mc)
    om[-top - 1:-top + hm + 1, -left - 1:-left + wm + 1] = _dilate3(m)
    tp = np.zeros((ht + 2, wt + 2), dtype=np.uint8)
    tp[1:-1, 1:-1] = tr
    ot = _dilate3(tr)
    wy = slice(ys[0] - 1 - top, ys[-1] - 1 - top + 1)
    wx = slice(xs[0] - 1 - left, xs[-1] - 1 - left + 1)
    win_om = sliding_window_view(om, tp.shape)[wy, wx]
    win_m = sliding_window_view(mc, tp.shape)[wy, wx]
    covered_t = np.minimum(win_om, tp).sum(axis=(2, 3), dtype=np.int64)
    covered_m = np.minimum(win_m, ot).sum(axis=(2, 3), dtype=np.int64)
    return (int(tr.sum(dtype=np.int64)) - covered_t) + (int(m.sum(dtype=np.int64)) - covered_m)


def dist_min(m: WordRaster, t: WordRaster, rng: SearchRange | None = None) -> PixMatch:
    """Exhaustive minimum of :func:`dist_at` over the shift and rotation grid.

    Ties go to the smallest |dx|+|dy|, then smallest |alpha|, then (dx, dy, alpha).
    """
    rng = rng or SearchRange()
    best = None
    xs_rel = range(rng.x_min, rng.x_max + 1)
    ys_rel = range(rng.y_min, rng.y_max + 1)
    for alpha in rng.alphas():
        tr = rotate_nearest(t.ink, alpha)
        cx, cy = center_offset(m.ink.shape, tr.shape)
        d = _shift_distances(m.ink, tr, range(cx + rng.x_min, cx + rng.x_max + 1),
                             range(cy + rng.y_min, cy + rng.y_max + 1))
        lowest = d.min()
        for iy, ix in zip(*np.nonzero(d == lowest)):
            dx, dy = xs_rel[ix], ys_rel[iy]
            key = (int(lowest), abs(dx) + abs(dy), abs(alpha), dx, dy, alpha)
            if best is None or key < best:
                best = key
    dist, _, _, dx, dy, alpha = best
    return PixMatch(dist, dx, dy, alpha)


def coeff_pix(m: WordRaster, t: WordRaster, rng: SearchRange | None = None) -> float:
    """Adaptive distance normalized by the larger ink mass (not clamped to 1)."""
    denom = max(m.ink_sum, t.ink_sum)
    if denom == 0:
        raise BothBlank("both word images are blank")
    return dist_min(m, t, rng).dist / denom


def words_equal_pix(m: WordRaster, t: WordRaster, p: PixParams) -> bool:
    return coeff_pix(m, t, p.range) < p.word_pixel_coeff


def translate(r: WordRaster, dx: int, dy: int) -> WordRaster:
    """Copy of ``r`` displaced by (dx, dy) relative to its frame center.

    The frame grows by 2|dx| x 2|dy| so no ink is clipped.
    """
    h, w = r.ink.shape
    out = np.zeros((h + 2 * abs(dy), w + 2 * abs(dx)), dtype=np.uint8)
    ox, oy = abs(dx) + dx, abs(dy) + dy
    out[oy:oy + h, ox:ox + w] = r.ink
    return WordRaster.from_ink(out)
