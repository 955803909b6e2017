import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from docdiff.errors import BothBlank, BoxOutOfBounds
from docdiff.font import render_text, text_width
from docdiff.pixmatch import (
    PixParams,
    SearchRange,
    WordRaster,
    coeff_pix,
    crop_word,
    dist_at,
    dist_min,
    extend_image,
    rotate_nearest,
    translate,
    words_equal_pix,
)
from docdiff.segment import Box

from oracles import max_filter_3x3, naive_dist, naive_dist_min, rotate_nn_loop

inks = arrays(np.uint8, st.tuples(st.integers(1, 10), st.integers(1, 10)),
              elements=st.sampled_from([0, 0, 0, 90, 255]))


def px(*rows):
    return WordRaster.from_ink(np.array(rows, np.uint8))


def rendered(text, jitter=(0, 0)):
    w = text_width(text, 2) + 12
    page = np.full((26, w), 255, np.uint8)
    render_text(page, text, 6 + jitter[0], 6 + jitter[1], 2)
    return page


def word(page):
    ys, xs = np.nonzero(page < 255)
    return crop_word(page, Box.from_corners(xs.min(), ys.min(), xs.max() + 1, ys.max() + 1))


# --- cropping and extension -------------------------------------------------------

def test_crop_word():
    page = np.full((4, 4), 255, np.uint8)
    page[1, 1] = 0
    assert crop_word(page, Box(0, 0, 1, 1)).ink_sum == 0
    r = crop_word(page, Box(1, 1, 1, 1))
    assert r.ink.tolist() == [[255]] and r.ink_sum == 255
    with pytest.raises(BoxOutOfBounds):
        crop_word(page, Box(3, 3, 2, 2))


def test_crop_word_binary_mode():
    page = np.array([[255, 10, 200, 30]], np.uint8)
    assert crop_word(page, Box(0, 0, 4, 1), binary=True).ink.tolist() == [[0, 255, 0, 255]]


def test_raster_invariants():
    r = WordRaster.from_ink(np.array([[1, 2], [3, 4]]))
    assert r.ink_sum == 10 and (r.width, r.height) == (2, 2)
    with pytest.raises(ValueError):
        WordRaster(np.zeros((2, 2), np.uint8), 5)
    with pytest.raises(ValueError):
        WordRaster.from_ink(np.zeros((0, 3)))


def test_extend_image_examples():
    a = np.zeros((5, 5), np.uint8)
    a[2, 2] = 255
    e = extend_image(WordRaster.from_ink(a)).ink
    assert (e[1:4, 1:4] == 255).all() and e.sum() == 9 * 255
    assert extend_image(WordRaster.from_ink(np.zeros((3, 3)))).ink_sum == 0


@given(arrays(np.uint8, st.tuples(st.integers(1, 16), st.integers(1, 16))))
@settings(max_examples=200, deadline=None)
def test_extend_image_matches_max_filter(a):
    assert np.array_equal(extend_image(WordRaster.from_ink(a)).ink, max_filter_3x3(a))


# --- rotation ------------------------------------------------------------------------

@given(inks, st.sampled_from([-2.0, -1.0, 0.0, 1.0, 2.0, 10.0]))
@settings(max_examples=200, deadline=None)
def test_rotate_nearest_matches_loop(a, alpha):
    assert np.array_equal(rotate_nearest(a, alpha), rotate_nn_loop(a, alpha))


# --- distance ----------------------------------------------------------------------------

def test_dist_at_examples():
    m = px([255, 0, 0, 0])
    assert dist_at(m, m, 0, 0, 0) == 0
    t = px([0, 0, 0, 255])
    assert dist_at(m, t, 0, 0, 0) == 510
    shifted = px([0, 255, 0, 0])
    assert dist_at(m, shifted, 0, 0, 0) == 0  # 1 px is inside the unit neighbourhood


@given(inks, inks, st.integers(-3, 3), st.integers(-3, 3), st.sampled_from([-1.0, 0.0, 1.0]))
@settings(max_examples=300, deadline=None)
def test_dist_at_matches_oracle(a, b, dx, dy, alpha):
    assert dist_at(WordRaster.from_ink(a), WordRaster.from_ink(b), dx, dy, alpha) == naive_dist(a, b, dx, dy, alpha)


@given(inks, inks)
@settings(max_examples=60, deadline=None)
def test_dist_min_matches_oracle(a, b):
    res = dist_min(WordRaster.from_ink(a), WordRaster.from_ink(b))
    assert (res.dist, res.dx, res.dy, res.alpha) == naive_dist_min(a, b)


def test_dist_min_shift_examples():
    rng = np.random.default_rng(1)
    m = WordRaster.from_ink((rng.random((8, 8)) < 0.4) * 255)
    res = dist_min(m, translate(m, 2, 1))
    assert res.dist == 0 and abs(res.dx + 2) <= 1 and abs(res.dy + 1) <= 1
    assert dist_min(m, m).at == (0, 0, 0.0)
    assert dist_min(m, translate(m, 5, 0)).dist > 0


@given(inks, inks)
@settings(max_examples=100, deadline=None)
def test_dist_min_symmetric_without_rotation(a, b):
    rng = SearchRange(alpha_min=0, alpha_max=0)
    ma, mb = WordRaster.from_ink(a), WordRaster.from_ink(b)
    assert dist_min(ma, mb, rng).dist == dist_min(mb, ma, rng).dist


@given(inks, inks)
@settings(max_examples=100, deadline=None)
def test_coeff_zero_iff_dist_zero(a, b):
    ma, mb = WordRaster.from_ink(a), WordRaster.from_ink(b)
    if ma.ink_sum == 0 and mb.ink_sum == 0:
        with pytest.raises(BothBlank):
            coeff_pix(ma, mb)
        return
    c = coeff_pix(ma, mb)
    assert c >= 0 and (c == 0) == (dist_min(ma, mb).dist == 0)


def test_coeff_examples():
    m = px([255, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0])
    t = px([0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 255])
    assert coeff_pix(m, m) == 0.0
    assert coeff_pix(m, t) == 2.0
    with pytest.raises(BothBlank):
        coeff_pix(px([0]), px([0, 0]))


def test_search_range_grid():
    r = SearchRange.symmetric(2, 1.0, 0.5)
    assert r.alphas() == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert len(r.shifts()) == 25
    with pytest.raises(ValueError):
        SearchRange(x_min=1, x_max=0)
    with pytest.raises(ValueError):
        PixParams(word_pixel_coeff=-0.1)


# --- rendered words --------------------------------------------------------------------

def test_digit_change_not_equal():
    a, b = word(rendered("27/07/07")), word(rendered("27/07/05"))
    c = coeff_pix(a, b)
    assert c > PixParams().word_pixel_coeff
    assert not words_equal_pix(a, b, PixParams())


@pytest.mark.parametrize("jitter", [(1, 0), (0, 1), (-1, 1), (1, -1)])
def test_jittered_rerender_equal(jitter):
    a = crop_word(rendered("SALAIRE"), Box(0, 0, text_width("SALAIRE", 2) + 12, 26))
    b = crop_word(rendered("SALAIRE", jitter), Box(0, 0, text_width("SALAIRE", 2) + 12, 26))
    assert words_equal_pix(a, b, PixParams())
    assert words_equal_pix(a, b, PixParams(word_pixel_coeff=0.25))
