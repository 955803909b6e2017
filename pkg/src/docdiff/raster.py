"""Page-level raster operations.

Images are plain numpy arrays: a gray image is a 2-D ``uint8`` array with
0 = ink and 255 = background, a binary mask is a 2-D ``bool`` array with
True = foreground.  Every function here is pure and returns a new array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image, UnidentifiedImageError

from .errors import BlankImage, CorruptImage, UnsupportedFormat

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
PNM_MAGICS = (b"P5", b"P6")

DEFAULT_MAX_ANGLE = 5.0
DEFAULT_ANGLE_STEP = 0.1


@dataclass(frozen=True)
class SkewEstimate:
    angle: float  # degrees, positive = text rotated counter-clockwise
    confidence: float


def round_half_up(x):
    """Round to the nearest integer, ties toward +inf (works on arrays)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


def as_gray(arr) -> np.ndarray:
    a = np.asarray(arr)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"gray image must be a non-empty 2-D array, got shape {a.shape}")
    if a.dtype != np.uint8:
        if a.min() < 0 or a.max() > 255:
            raise ValueError("gray intensities must lie in [0, 255]")
        a = a.astype(np.uint8)
    return a


def load_image(path) -> np.ndarray:
    """Load a PNG or binary PGM file as a gray image.

    Color inputs are reduced with Rec. 601 luma weights, rounded to nearest.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    with open(path, "rb") as fh:
        head = fh.read(8)
    known = head.startswith(PNG_MAGIC) or head[:2] in PNM_MAGICS
    try:
        with Image.open(path) as im:
            im.load()
            fmt, mode = im.format, im.mode
            if fmt not in ("PNG", "PPM"):
                raise UnsupportedFormat(f"{path}: format {fmt} not supported (PNG or PGM only)")
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            if mode == "1":
                im = im.convert("L")
                mode = "L"
            if mode in ("L", "LA"):
                return np.array(im.getchannel(0), dtype=np.uint8)
            if mode in ("RGB", "RGBA"):
                rgb = np.array(im.convert("RGB"), dtype=np.int64)
    except (UnsupportedFormat, FileNotFoundError):
        raise
    except UnidentifiedImageError as exc:
        if known:
            raise CorruptImage(f"{path}: {exc}") from exc
        raise UnsupportedFormat(f"{path}: not a PNG or PGM image") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptImage(f"{path}: {exc}") from exc
    if mode not in ("RGB", "RGBA"):
        raise UnsupportedFormat(f"{path}: pixel mode {mode} not supported (8-bit gray or RGB)")
    luma = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return luma.astype(np.uint8)


def _value_at_rank(hist_cum: np.ndarray, rank: int) -> int:
    return int(np.searchsorted(hist_cum, rank, side="right"))


def auto_contrast(img, low_pct: float = 0.01, high_pct: float = 0.99) -> np.ndarray:
    """Linearly stretch the [low_pct, high_pct] intensity percentiles to [0, 255]."""
    if not 0.0 <= low_pct < high_pct <= 1.0:
        raise ValueError("need 0 <= low_pct < high_pct <= 1")
    img = as_gray(img)
    n = img.size
    cum = np.cumsum(np.bincount(img.ravel(), minlength=256))
    lo = _value_at_rank(cum, math.floor(low_pct * (n - 1)))
    hi = _value_at_rank(cum, math.ceil(high_pct * (n - 1)))
    if hi <= lo:
        return img.copy()
    span = hi - lo
    v = np.clip(np.arange(256, dtype=np.int64), lo, hi) - lo
    # floor(v * 255 / span + 1/2) in exact integer arithmetic
    lut = ((2 * 255 * v + span) // (2 * span)).astype(np.uint8)
    return lut[img]


def otsu_threshold(img) -> int | None:
    """Otsu threshold t such that ink is ``intensity < t``; None for constant images."""
    img = as_gray(img)
    hist = np.bincount(img.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)[:-1]  # pixels with value < t, for t = 1..255
    s0 = np.cumsum(hist * levels)[:-1]
    w1 = total - w0
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return None
    mu0 = np.divide(s0, w0, out=np.zeros_like(s0), where=w0 > 0)
    mu1 = np.divide(s0[-1] + hist[-1] * 255.0 - s0, w1, out=np.zeros_like(s0), where=w1 > 0)
    between = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    best = np.flatnonzero(between == between.max())
    # middle of the maximizing plateau keeps two-level images symmetric
    return int(best[len(best) // 2]) + 1


def binarize(img) -> np.ndarray:
    img = as_gray(img)
    t = otsu_threshold(img)
    if t is None:
        return np.zeros(img.shape, dtype=bool)
    return img < t


def _check_kernel(kernel_w: int, kernel_h: int) -> None:
    for k in (kernel_w, kernel_h):
        if k < 1 or k % 2 == 0:
            raise ValueError(f"kernel dimensions must be odd and >= 1, got {kernel_w}x{kernel_h}")


def _filter_1d(a: np.ndarray, k: int, axis: int, reduce) -> np.ndarray:
    if k == 1:
        return a
    r = k // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(a, pad, constant_values=False)
    windows = sliding_window_view(padded, k, axis=axis)
    return reduce(windows, axis=-1)


def dilate(mask, kernel_w: int, kernel_h: int) -> np.ndarray:
    """Binary dilation by a flat ``kernel_w`` x ``kernel_h`` rectangle."""
    _check_kernel(kernel_w, kernel_h)
    m = np.asarray(mask, dtype=bool)
    return _filter_1d(_filter_1d(m, kernel_w, 1, np.any), kernel_h, 0, np.any)


def erode(mask, kernel_w: int, kernel_h: int) -> np.ndarray:
    """Binary erosion; pixels beyond the border count as background."""
    _check_kernel(kernel_w, kernel_h)
    m = np.asarray(mask, dtype=bool)
    return _filter_1d(_filter_1d(m, kernel_w, 1, np.all), kernel_h, 0, np.all)


def projection(mask, axis: str) -> np.ndarray:
    """Foreground counts per row (``"horizontal"``) or per column (``"vertical"``)."""
    m = np.asarray(mask, dtype=bool)
    if axis == "horizontal":
        return m.sum(axis=1, dtype=np.int64)
    if axis == "vertical":
        return m.sum(axis=0, dtype=np.int64)
    raise ValueError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")


def rotate(img, angle: float) -> np.ndarray:
    """Rotate counter-clockwise by ``angle`` degrees about the image center.

    Bilinear interpolation; samples falling outside the source read as white.
    The output keeps the input dimensions.
    """
    img = as_gray(img)
    if angle == 0:
        return img.copy()
    h, w = img.shape
    a = math.radians(angle)
    c, s = math.cos(a), math.sin(a)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w]
    u = xx - cx
    v = yy - cy
    sx = c * u - s * v + cx
    sy = s * u + c * v + cy
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0

    padded = np.pad(img.astype(np.float64), 1, constant_values=255.0)

    def sample(yi, xi):
        yi = np.clip(yi + 1, 0, h + 1)
        xi = np.clip(xi + 1, 0, w + 1)
        return padded[yi, xi]

    val = (
        (1 - fx) * (1 - fy) * sample(y0, x0)
        + fx * (1 - fy) * sample(y0, x0 + 1)
        + (1 - fx) * fy * sample(y0 + 1, x0)
        + fx * fy * sample(y0 + 1, x0 + 1)
    )
    return np.clip(round_half_up(val), 0, 255).astype(np.uint8)


def angle_grid(max_angle: float, step: float) -> np.ndarray:
    n = int(math.floor(max_angle / step + 1e-9))
    return np.round(np.arange(-n, n + 1) * step, 10)


def estimate_skew(img, max_angle: float = DEFAULT_MAX_ANGLE,
                  step: float = DEFAULT_ANGLE_STEP) -> SkewEstimate:
    """Find the text skew maximizing the variance of the row projection profile.

    Foreground coordinates are rotated by ``-angle`` for every angle of the
    grid, which is the projection form of a Hough accumulator restricted to
    near-horizontal lines.
    """
    if not 0 < step <= max_angle <= 15:
        raise ValueError("need 0 < step <= max_angle <= 15")
    img = as_gray(img)
    mask = binarize(img)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise BlankImage("no foreground pixels to estimate skew from")
    h, w = img.shape
    u = xs - (w - 1) / 2.0
    v = ys - (h - 1) / 2.0
    reach = int(math.ceil(math.hypot(w, h) / 2.0)) + 1
    nbins = 2 * reach + 1
    angles = angle_grid(max_angle, step)
    variances = np.empty(len(angles))
    for i, ang in enumerate(angles):
        a = math.radians(ang)
        rows = np.floor(math.sin(a) * u + math.cos(a) * v + 0.5).astype(np.int64) + reach
        variances[i] = np.bincount(rows, minlength=nbins).var()
    order = sorted(range(len(angles)), key=lambda i: (-variances[i], abs(angles[i]), angles[i]))
    best = order[0]
    top = variances[best]
    confidence = 0.0 if top <= 0 else float(np.clip(1.0 - np.median(variances) / top, 0.0, 1.0))
    return SkewEstimate(angle=float(angles[best]), confidence=confidence)


def deskew(img, max_angle: float = DEFAULT_MAX_ANGLE, step: float = DEFAULT_ANGLE_STEP):
    """Estimate skew and rotate it away.  Returns ``(image, estimate)``."""
    est = estimate_skew(img, max_angle, step)
    if est.angle == 0:
        return as_gray(img).copy(), est
    return rotate(img, -est.angle), est
