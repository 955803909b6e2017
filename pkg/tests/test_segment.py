import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from docdiff.errors import BlankImage
from docdiff.raster import binarize
from docdiff.segment import (
    Box,
    CharMetrics,
    closing_width,
    estimate_char_metrics,
    layout_page,
    segment_lines,
    segment_words,
    union_all,
)
from docdiff.synth import SynthSpec, generate_pair


def three_stripes():
    m = np.zeros((60, 40), bool)
    for top in (5, 21, 37):
        m[top:top + 10, 3:30] = True
    return m


# --- Box --------------------------------------------------------------------------

def test_box_geometry():
    a, b = Box(0, 0, 4, 4), Box(2, 2, 4, 4)
    assert a.intersection_area(b) == 4
    assert a.iou(b) == pytest.approx(4 / 28)
    assert a.union(b) == Box(0, 0, 6, 6)
    assert a.x_overlap(b) == 2
    assert Box(1, 1, 2, 2).within(3, 3) and not Box(2, 2, 2, 2).within(3, 3)
    assert union_all([a, b]).as_list() == [0, 0, 6, 6]
    with pytest.raises(ValueError):
        Box(0, 0, 0, 1)


@given(st.tuples(*[st.integers(0, 20)] * 2, *[st.integers(1, 10)] * 2),
       st.tuples(*[st.integers(0, 20)] * 2, *[st.integers(1, 10)] * 2))
def test_iou_symmetric_bounded(p, q):
    a, b = Box(*p), Box(*q)
    assert a.iou(b) == b.iou(a)
    assert 0.0 <= a.iou(b) <= 1.0
    assert a.iou(a) == 1.0


# --- metrics and lines ---------------------------------------------------------------

def test_char_metrics_three_stripes():
    m = estimate_char_metrics(three_stripes())
    assert (m.char_height, m.line_gap, m.space_width) == (10, 6, 3)


def test_char_metrics_single_stripe():
    m = np.zeros((20, 20), bool)
    m[5:10, 2:18] = True
    cm = estimate_char_metrics(m)
    assert cm.char_height == 5 and cm.line_gap == 5


def test_char_metrics_blank():
    with pytest.raises(BlankImage):
        estimate_char_metrics(np.zeros((5, 5), bool))


def test_space_width_floor():
    assert CharMetrics.from_char_height(3).space_width == 2
    assert CharMetrics.from_char_height(14).space_width == 4


def test_segment_lines_three_stripes():
    m = three_stripes()
    boxes = segment_lines(m, estimate_char_metrics(m))
    assert [(b.y, b.h) for b in boxes] == [(5, 10), (21, 10), (37, 10)]


def test_segment_lines_blank():
    assert segment_lines(np.zeros((10, 10), bool), CharMetrics(5, 5, 2)) == []


def test_segment_lines_merges_small_gap():
    m = np.zeros((40, 30), bool)
    m[5:10, 2:28] = True
    m[11:16, 2:28] = True  # 1-px gap, well under 0.3 x line gap
    boxes = segment_lines(m, CharMetrics(10, 10, 3))
    assert boxes == [Box(2, 5, 26, 11)]


@given(st.integers(0, 6), st.integers(0, 6))
def test_segment_lines_padding_invariant(top, left):
    m = three_stripes()
    cm = estimate_char_metrics(m)
    padded = np.pad(m, ((top, 2), (left, 3)))
    shifted = [b.shifted(left, top) for b in segment_lines(m, cm)]
    assert segment_lines(padded, cm) == shifted


# --- words ---------------------------------------------------------------------

def test_segment_words_gap_rule():
    m = np.zeros((10, 40), bool)
    cm = CharMetrics.from_char_height(10)  # space 3, closing width 3
    m[0:10, 2:8] = True
    m[0:10, 8 + 2 * cm.space_width:20] = True
    m[0:10, 21:26] = True  # 1-px gap closes
    line = Box(0, 0, 40, 10)
    words = segment_words(m, line, cm)
    assert words == [Box(2, 0, 6, 10), Box(14, 0, 12, 10)]
    assert segment_words(np.zeros((10, 40), bool), line, cm) == []


def test_closing_width_is_odd():
    for ch in range(1, 40):
        k = closing_width(CharMetrics.from_char_height(ch))
        assert k % 2 == 1 and k >= 1


def test_layout_page_matches_generator_truth():
    pair = generate_pair(SynthSpec(seed=3, lines=2, words_per_line=(3, 3)))
    from docdiff.ocr import parse_hocr

    truth = parse_hocr(pair.ref_hocr)
    layout = layout_page(pair.ref_img)
    assert len(layout.lines) == 2
    for line, tline in zip(layout.lines, truth.lines):
        assert len(line.words) == 3
        for b, t in zip(line.words, tline.words):
            assert all(abs(u - v) <= 2 for u, v in zip(b.as_list(), t.box.as_list()))
            assert line.line_box.contains(b)


def test_layout_page_single_word_and_blank():
    pair = generate_pair(SynthSpec(seed=1, lines=1, words_per_line=(1, 1)))
    layout = layout_page(pair.ref_img)
    assert len(layout.lines) == 1 and len(layout.lines[0].words) == 1
    with pytest.raises(BlankImage):
        layout_page(np.full((20, 20), 255, np.uint8))


def test_words_disjoint_and_cover_line_ink():
    pair = generate_pair(SynthSpec(seed=5, lines=4))
    mask = binarize(pair.ref_img)
    for line in layout_page(pair.ref_img).lines:
        xs = sorted((w.x, w.x1) for w in line.words)
        assert all(a[1] <= b[0] for a, b in zip(xs, xs[1:]))
        covered = np.zeros_like(mask)
        for w in line.words:
            covered[w.y:w.y1, w.x:w.x1] = True
        lb = line.line_box
        strip = mask[lb.y:lb.y1, lb.x:lb.x1]
        assert np.array_equal(strip & covered[lb.y:lb.y1, lb.x:lb.x1], strip)
