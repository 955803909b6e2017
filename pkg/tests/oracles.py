"""Slow, independent reference implementations used to check the fast code."""

from __future__ import annotations

import itertools
import math

import numpy as np

CONFUSABLE_CLASSES = [
    set("-­‐‑‒–—―−⁃﹘﹣－"),
    set("'\"`´‘’‚‛“”„‟«»‹›′″＂＇"),
    set("oO0"),
    set("iIl1|"),
]


def sub_cost(a: str, b: str) -> int:
    if a == b:
        return 0
    for cls in CONFUSABLE_CLASSES:
        if a in cls and b in cls:
            return 0
    return 1


def edit_distance_dp(a: str, b: str) -> int:
    """Full Wagner-Fischer table with per-pair substitution costs."""
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + sub_cost(a[i - 1], b[j - 1]))
    return d[n][m]


def max_filter_3x3(a: np.ndarray) -> np.ndarray:
    """Pixel-by-pixel 3x3 maximum; neighbours outside the raster are ignored."""
    h, w = a.shape
    out = np.zeros_like(a)
    for y in range(h):
        for x in range(w):
            best = 0
            for yy in range(max(0, y - 1), min(h, y + 2)):
                for xx in range(max(0, x - 1), min(w, x + 2)):
                    best = max(best, int(a[yy, xx]))
            out[y, x] = best
    return out


def rotate_nn_loop(ink: np.ndarray, alpha: float) -> np.ndarray:
    """Nearest-neighbour rotation about the center onto the enclosing frame, by loops."""
    if alpha == 0:
        return ink.copy()
    h, w = ink.shape
    r = math.radians(alpha)
    c, s = math.cos(r), math.sin(r)
    w2 = max(1, math.ceil(w * abs(c) + h * abs(s) - 1e-9))
    h2 = max(1, math.ceil(w * abs(s) + h * abs(c) - 1e-9))
    out = np.zeros((h2, w2), dtype=ink.dtype)
    for y in range(h2):
        for x in range(w2):
            u, v = x - (w2 - 1) / 2, y - (h2 - 1) / 2
            sx = math.floor(c * u - s * v + (w - 1) / 2 + 0.5)
            sy = math.floor(s * u + c * v + (h - 1) / 2 + 0.5)
            if 0 <= sx < w and 0 <= sy < h:
                out[y, x] = ink[sy, sx]
    return out


def _round_away(v: float) -> int:
    return int(math.floor(v + 0.5)) if v >= 0 else -int(math.floor(-v + 0.5))


def _extend(canvas: np.ndarray) -> np.ndarray:
    h, w = canvas.shape
    p = np.pad(canvas, 1)
    stack = [p[dy:dy + h, dx:dx + w] for dy in range(3) for dx in range(3)]
    return np.max(stack, axis=0)


def naive_dist(m: np.ndarray, t: np.ndarray, dx: int, dy: int, alpha: float, rotated=None) -> int:
    """Distance on one generous fixed canvas, frames centered, test moved by (dx, dy)."""
    tr = rotate_nn_loop(t, alpha) if rotated is None else rotated
    pad = 8 + abs(dx) + abs(dy)
    H = max(m.shape[0], tr.shape[0]) + 2 * pad
    W = max(m.shape[1], tr.shape[1]) + 2 * pad
    cm = np.zeros((H, W), dtype=np.int64)
    ct = np.zeros((H, W), dtype=np.int64)
    cm[pad:pad + m.shape[0], pad:pad + m.shape[1]] = m
    ox = pad + _round_away((m.shape[1] - tr.shape[1]) / 2) + dx
    oy = pad + _round_away((m.shape[0] - tr.shape[0]) / 2) + dy
    ct[oy:oy + tr.shape[0], ox:ox + tr.shape[1]] = tr
    em, et = _extend(cm), _extend(ct)
    return int(np.clip(ct - em, 0, None).sum() + np.clip(cm - et, 0, None).sum())


def naive_dist_min(m: np.ndarray, t: np.ndarray, shift: int = 3, alphas=(-1.0, 0.0, 1.0)):
    """Full grid scan with the documented tie-break order."""
    best = None
    for alpha in alphas:
        tr = rotate_nn_loop(t, alpha)
        for dy in range(-shift, shift + 1):
            for dx in range(-shift, shift + 1):
                d = naive_dist(m, t, dx, dy, alpha, rotated=tr)
                key = (d, abs(dx) + abs(dy), abs(alpha), dx, dy, alpha)
                if best is None or key < best:
                    best = key
    return best[0], best[3], best[4], best[5]


def best_matching(n: int, m: int, score):
    """Exhaustive search over order-preserving matchings; returns (count, total)."""
    admissible = [(i, j) for i in range(n) for j in range(m) if score(i, j) is not None]
    best = (0, 0.0)
    for k in range(1, min(n, m) + 1):
        for combo in itertools.combinations(admissible, k):
            if all(a[0] < b[0] and a[1] < b[1] for a, b in zip(combo, combo[1:])):
                total = sum(score(i, j) for i, j in combo)
                best = max(best, (k, total))
    return best


def otsu_bruteforce(values) -> int | None:
    """Threshold t (ink is value < t) maximizing between-class variance; middle of ties."""
    v = np.asarray(values, dtype=np.float64).ravel()
    scores = []
    for t in range(1, 256):
        a, b = v[v < t], v[v >= t]
        if a.size == 0 or b.size == 0:
            scores.append(None)
            continue
        scores.append(a.size * b.size * (a.mean() - b.mean()) ** 2)
    valid = [s for s in scores if s is not None]
    if not valid:
        return None
    top = max(valid)
    # tolerate float association differences between the two formulations
    ties = [t for t, s in zip(range(1, 256), scores) if s is not None and s >= top * (1 - 1e-12)]
    return ties[len(ties) // 2]
