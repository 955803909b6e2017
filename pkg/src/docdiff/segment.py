"""Text line and word segmentation from projection profiles."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

from .errors import BlankImage
from .raster import binarize, dilate, erode, projection, round_half_up

NOISE_FLOOR = 2
SPACE_COEFF = 0.3
LINE_MERGE_COEFF = 0.3


@dataclass(frozen=True, order=True)
class Box:
    """Axis-aligned rectangle; (x, y) is the top-left corner."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box must have positive size, got {self}")

    @property
    def x1(self) -> int:
        return self.x + self.w

    @property
    def y1(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    @classmethod
    def from_corners(cls, x0, y0, x1, y1) -> "Box":
        return cls(int(x0), int(y0), int(x1 - x0), int(y1 - y0))

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]

    def union(self, other: "Box") -> "Box":
        return Box.from_corners(min(self.x, other.x), min(self.y, other.y),
                                max(self.x1, other.x1), max(self.y1, other.y1))

    def intersection_area(self, other: "Box") -> int:
        iw = min(self.x1, other.x1) - max(self.x, other.x)
        ih = min(self.y1, other.y1) - max(self.y, other.y)
        return max(0, iw) * max(0, ih)

    def iou(self, other: "Box") -> float:
        inter = self.intersection_area(other)
        return inter / (self.area + other.area - inter)

    def x_overlap(self, other: "Box") -> int:
        return max(0, min(self.x1, other.x1) - max(self.x, other.x))

    def contains(self, other: "Box") -> bool:
        return (self.x <= other.x and self.y <= other.y
                and other.x1 <= self.x1 and other.y1 <= self.y1)

    def within(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x1 <= width and self.y1 <= height

    def shifted(self, dx: int, dy: int) -> "Box":
        return Box(self.x + dx, self.y + dy, self.w, self.h)


def union_all(boxes) -> Box:
    boxes = list(boxes)
    out = boxes[0]
    for b in boxes[1:]:
        out = out.union(b)
    return out


@dataclass(frozen=True)
class CharMetrics:
    char_height: int
    line_gap: int
    space_width: int

    def __post_init__(self):
        if min(self.char_height, self.line_gap, self.space_width) < 1:
            raise ValueError(f"character metrics must be >= 1: {self}")

    @classmethod
    def from_char_height(cls, char_height: int, line_gap: int | None = None) -> "CharMetrics":
        space = max(2, int(round_half_up(SPACE_COEFF * char_height)))
        return cls(char_height, line_gap if line_gap is not None else char_height, space)


@dataclass
class LineLayout:
    line_box: Box
    words: list[Box] = field(default_factory=list)


@dataclass
class PageLayout:
    lines: list[LineLayout] = field(default_factory=list)


def _runs(flags: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, end) runs of True values."""
    f = np.concatenate(([False], np.asarray(flags, dtype=bool), [False]))
    edges = np.flatnonzero(f[1:] != f[:-1])
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def _bands(profile: np.ndarray, floor: int = NOISE_FLOOR) -> list[tuple[int, int]]:
    """Rows above the noise floor, each band grown over adjacent nonzero rows."""
    core = _runs(profile > floor)
    nonzero = profile > 0
    grown = []
    for a, b in core:
        while a > 0 and nonzero[a - 1] and (not grown or a - 1 >= grown[-1][1]):
            a -= 1
        while b < len(profile) and nonzero[b]:
            b += 1
        if grown and a <= grown[-1][1]:
            grown[-1] = (grown[-1][0], b)
        else:
            grown.append((a, b))
    return grown


def _median_int(values) -> int:
    return int(round_half_up(statistics.median(values)))


def estimate_char_metrics(mask) -> CharMetrics:
    """Character height, line gap and space width from the row projection."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise BlankImage("cannot estimate character metrics of a blank mask")
    bands = _bands(projection(mask, "horizontal"))
    if not bands:
        # ink exists but every row is under the noise floor
        bands = _runs(projection(mask, "horizontal") > 0)
    char_height = max(1, _median_int([b - a for a, b in bands]))
    gaps = [nxt[0] - cur[1] for cur, nxt in zip(bands, bands[1:])]
    line_gap = max(1, _median_int(gaps)) if gaps else char_height
    return CharMetrics.from_char_height(char_height, line_gap)


def _tight_box(mask: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> Box | None:
    sub = mask[y0:y1, x0:x1]
    rows = np.flatnonzero(sub.any(axis=1))
    cols = np.flatnonzero(sub.any(axis=0))
    if rows.size == 0:
        return None
    return Box.from_corners(x0 + cols[0], y0 + rows[0], x0 + cols[-1] + 1, y0 + rows[-1] + 1)


def segment_lines(mask, metrics: CharMetrics) -> list[Box]:
    mask = np.asarray(mask, dtype=bool)
    bands = _bands(projection(mask, "horizontal"))
    merge_below = LINE_MERGE_COEFF * metrics.line_gap
    merged: list[tuple[int, int]] = []
    for a, b in bands:
        if merged and a - merged[-1][1] < merge_below:
            merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    width = mask.shape[1]
    boxes = []
    for a, b in merged:
        box = _tight_box(mask, 0, a, width, b)
        if box is not None:
            boxes.append(box)
    return boxes


def closing_width(metrics: CharMetrics) -> int:
    k = max(1, metrics.space_width - 1)
    return k if k % 2 else k + 1


def segment_words(mask, line: Box, metrics: CharMetrics) -> list[Box]:
    """Split a line into words at column gaps that survive a horizontal closing.

    The closing runs on the strip's column occupancy, so a letter gap is bridged
    whenever it is narrower than the kernel, whatever rows the glyph edges use.
    """
    mask = np.asarray(mask, dtype=bool)
    strip = mask[line.y:line.y1, line.x:line.x1]
    if not strip.any():
        return []
    k = closing_width(metrics)
    cols = np.pad(projection(strip, "vertical") > 0, k)[None, :]
    closed = erode(dilate(cols, k, 1), k, 1)[0, k:-k]
    words = []
    for a, b in _runs(closed):
        box = _tight_box(mask, line.x + a, line.y, line.x + b, line.y1)
        if box is not None:
            words.append(box)
    return words


def layout_page(img) -> PageLayout:
    """Binarize a deskewed page and segment it into lines of word boxes."""
    mask = binarize(img)
    metrics = estimate_char_metrics(mask)
    return layout_mask(mask, metrics)


def layout_mask(mask, metrics: CharMetrics) -> PageLayout:
    page = PageLayout()
    for line in segment_lines(mask, metrics):
        page.lines.append(LineLayout(line, segment_words(mask, line, metrics)))
    return page
