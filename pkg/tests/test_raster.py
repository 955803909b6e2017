import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from docdiff.errors import BlankImage, CorruptImage, UnsupportedFormat
from docdiff.raster import (
    angle_grid,
    auto_contrast,
    binarize,
    deskew,
    dilate,
    erode,
    estimate_skew,
    load_image,
    otsu_threshold,
    projection,
    rotate,
)

from oracles import otsu_bruteforce

masks = arrays(bool, st.tuples(st.integers(1, 16), st.integers(1, 16)))
grays = arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12)))


def stripes(h=120, w=200, thick=4, period=14):
    img = np.full((h, w), 255, np.uint8)
    for y in range(10, h - 10, period):
        img[y:y + thick, 20:w - 20] = 0
    return img


# --- loading -------------------------------------------------------------------

def test_load_pgm_identity(tmp_path):
    p = tmp_path / "one.pgm"
    p.write_bytes(b"P5\n1 1\n255\n" + bytes([128]))
    assert load_image(p).tolist() == [[128]]


def test_load_rgb_png_uses_rec601_luma(tmp_path):
    p = tmp_path / "red.png"
    Image.new("RGB", (1, 1), (255, 0, 0)).save(p)
    assert load_image(p).tolist() == [[76]]


@given(st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)))
@settings(max_examples=50, deadline=None)
def test_luma_matches_float_formula(rgb):
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        p = f"{d}/c.png"
        Image.new("RGB", (1, 1), rgb).save(p)
        expected = int(np.floor(0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2] + 0.5))
        assert load_image(p)[0, 0] == expected


def test_load_gray_png_and_palette(tmp_path):
    Image.fromarray(np.array([[0, 200]], np.uint8)).save(tmp_path / "g.png")
    assert load_image(tmp_path / "g.png").tolist() == [[0, 200]]
    Image.new("RGB", (2, 1), (0, 0, 255)).convert("P").save(tmp_path / "p.png")
    assert load_image(tmp_path / "p.png").tolist() == [[29, 29]]


def test_truncated_png_is_corrupt(tmp_path):
    good = tmp_path / "g.png"
    Image.fromarray(np.zeros((40, 40), np.uint8)).save(good)
    bad = tmp_path / "bad.png"
    bad.write_bytes(good.read_bytes()[:30])
    with pytest.raises(CorruptImage):
        load_image(bad)


def test_unsupported_and_missing(tmp_path):
    (tmp_path / "x.txt").write_text("hello")
    with pytest.raises(UnsupportedFormat):
        load_image(tmp_path / "x.txt")
    Image.new("RGB", (2, 2)).save(tmp_path / "x.bmp")
    with pytest.raises(UnsupportedFormat):
        load_image(tmp_path / "x.bmp")
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "missing.png")


# --- auto contrast ---------------------------------------------------------------

def test_auto_contrast_constant_unchanged():
    img = np.full((3, 4), 77, np.uint8)
    assert np.array_equal(auto_contrast(img), img)


def test_auto_contrast_three_levels_rounds_half_up():
    # (150 - 100) * 255 / 100 = 127.5 rounds half-up to 128
    out = auto_contrast(np.array([[100, 150, 200]], np.uint8), 0.0, 1.0)
    assert out.tolist() == [[0, 128, 255]]


def test_auto_contrast_full_range_unchanged():
    img = np.array([[0, 255, 0, 255]], np.uint8)
    assert np.array_equal(auto_contrast(img), img)


@given(grays)
@settings(max_examples=200, deadline=None)
def test_auto_contrast_idempotent_full_percentiles(img):
    once = auto_contrast(img, 0.0, 1.0)
    assert np.array_equal(auto_contrast(once, 0.0, 1.0), once)


@given(grays)
@settings(max_examples=200, deadline=None)
def test_auto_contrast_matches_linear_map(img):
    lo, hi = int(img.min()), int(img.max())
    out = auto_contrast(img, 0.0, 1.0)
    if hi == lo:
        assert np.array_equal(out, img)
    else:
        ref = np.floor((img.astype(float) - lo) * 255 / (hi - lo) + 0.5).astype(np.uint8)
        assert np.array_equal(out, ref)


def test_auto_contrast_rejects_bad_percentiles():
    with pytest.raises(ValueError):
        auto_contrast(np.zeros((2, 2), np.uint8), 0.5, 0.5)


# --- binarization ------------------------------------------------------------------

def test_binarize_two_class():
    assert binarize(np.array([[0, 0, 255, 255]], np.uint8)).tolist() == [[True, True, False, False]]


def test_binarize_constant_is_background():
    assert not binarize(np.full((4, 4), 0, np.uint8)).any()


def test_binarize_checkerboard():
    cb = (np.indices((6, 6)).sum(axis=0) % 2 * 255).astype(np.uint8)
    assert np.array_equal(binarize(cb), cb == 0)


@given(grays)
@settings(max_examples=200, deadline=None)
def test_otsu_matches_bruteforce(img):
    assert otsu_threshold(img) == otsu_bruteforce(img)


# --- morphology and projections ---------------------------------------------------------

def test_dilate_erode_single_pixel():
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    d = dilate(m, 3, 3)
    assert d.sum() == 9 and d[1:4, 1:4].all()
    assert not erode(m, 3, 3).any()


def test_kernel_must_be_odd():
    with pytest.raises(ValueError):
        dilate(np.zeros((3, 3), bool), 2, 1)


def _brute_morph(m, kw, kh, fn):
    h, w = m.shape
    out = np.zeros_like(m)
    for y in range(h):
        for x in range(w):
            vals = []
            for yy in range(y - kh // 2, y + kh // 2 + 1):
                for xx in range(x - kw // 2, x + kw // 2 + 1):
                    vals.append(bool(m[yy, xx]) if 0 <= yy < h and 0 <= xx < w else False)
            out[y, x] = fn(vals)
    return out


@given(masks, st.sampled_from([1, 3, 5]), st.sampled_from([1, 3]))
@settings(max_examples=150, deadline=None)
def test_morphology_matches_bruteforce(m, kw, kh):
    assert np.array_equal(dilate(m, kw, kh), _brute_morph(m, kw, kh, any))
    assert np.array_equal(erode(m, kw, kh), _brute_morph(m, kw, kh, all))


@given(masks, masks)
@settings(max_examples=150, deadline=None)
def test_morphology_extensive_and_monotone(a, b):
    assert (dilate(a, 3, 3) >= a).all()
    assert (erode(a, 3, 3) <= a).all()
    if a.shape == b.shape:
        lo = a & b
        assert (dilate(lo, 3, 3) <= dilate(a, 3, 3)).all()
        assert (erode(lo, 3, 3) <= erode(a, 3, 3)).all()


@given(masks)
@settings(max_examples=150, deadline=None)
def test_closing_covers_interior(m):
    closed = erode(dilate(m, 3, 3), 3, 3)
    assert (closed[1:-1, 1:-1] >= m[1:-1, 1:-1]).all()


def test_projection_examples():
    m = np.array([[1, 0], [1, 1]], bool)
    assert projection(m, "horizontal").tolist() == [1, 2]
    assert projection(m, "vertical").tolist() == [2, 1]
    assert projection(np.zeros((2, 3), bool), "vertical").tolist() == [0, 0, 0]


@given(masks)
def test_projection_totals(m):
    assert projection(m, "horizontal").sum() == projection(m, "vertical").sum() == m.sum()


# --- rotation and skew ---------------------------------------------------------------

@given(grays)
def test_rotate_zero_is_identity(img):
    assert np.array_equal(rotate(img, 0), img)


def test_rotate_center_pixel_fixed():
    img = np.full((5, 5), 255, np.uint8)
    img[2, 2] = 0
    assert rotate(img, 90)[2, 2] == 0 and rotate(img, 90).shape == (5, 5)


def test_rotate_is_counter_clockwise():
    img = np.full((21, 21), 255, np.uint8)
    img[10, 15] = 0  # right of center
    ink = 255 - rotate(img, 45).astype(float)
    ys, xs = np.indices(ink.shape)
    cy, cx = (ys * ink).sum() / ink.sum(), (xs * ink).sum() / ink.sum()
    assert cy < 9 and cx > 11  # moved up-right


def test_rotate_quarter_turns_are_exact():
    img = np.random.default_rng(0).integers(0, 256, (9, 9)).astype(np.uint8)
    assert np.array_equal(rotate(img, 90), np.rot90(img))


def test_angle_grid():
    g = angle_grid(5, 0.1)
    assert len(g) == 101 and g[0] == -5.0 and g[50] == 0.0


@pytest.mark.parametrize("theta", [-4.0, -2.0, 0.0, 2.0, 4.0])
def test_estimate_skew_recovers_rotation(theta):
    est = estimate_skew(rotate(stripes(), theta))
    assert abs(est.angle - theta) <= 0.1 + 1e-9
    assert 0.0 <= est.confidence <= 1.0


def test_skew_blank_and_range():
    with pytest.raises(BlankImage):
        estimate_skew(np.full((10, 10), 255, np.uint8))
    with pytest.raises(ValueError):
        estimate_skew(stripes(), max_angle=20)


def test_deskew_round_trip_variance():
    base = stripes()
    fixed, est = deskew(rotate(base, 2.0))
    v0 = projection(binarize(base), "horizontal").var()
    v1 = projection(binarize(fixed), "horizontal").var()
    assert abs(est.angle - 2.0) <= 0.1 + 1e-9
    assert abs(v1 - v0) <= 0.05 * v0
