"""OCR-based word similarity and order-preserving line/word alignment."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .ocr import DASHES, QUOTES, DocumentText, TextPoint

# substitutions inside one class cost nothing
EDIT_CLASSES = (DASHES, QUOTES, "oO0", "iIl1|")
_CANON = {ord(ch): cls[0] for cls in EDIT_CLASSES for ch in cls}


@dataclass(frozen=True)
class MatchParams:
    word_ocr_simil: float = 0.9
    line_simil: float = 0.5

    def __post_init__(self):
        for name in ("word_ocr_simil", "line_simil"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass
class LineAlignment:
    pairs: list[tuple[int, int]] = field(default_factory=list)
    ref_only: list[int] = field(default_factory=list)
    test_only: list[int] = field(default_factory=list)
    similarity: list[float] = field(default_factory=list)


@dataclass
class WordAlignment:
    pairs: list[tuple[int, int, float]] = field(default_factory=list)
    ref_only: list[int] = field(default_factory=list)
    test_only: list[int] = field(default_factory=list)
    # split/merge repairs: (ref indices, test indices, coeff) with one side of length >= 2
    merged: list[tuple[tuple[int, ...], tuple[int, ...], float]] = field(default_factory=list)


def canonical(s: str) -> str:
    return s.translate(_CANON)


def levenshtein(a: str, b: str) -> int:
    """Plain unit-cost Levenshtein distance."""
    if a == b:
        return 0
    # shared prefix and suffix never change the distance
    lo = 0
    n = min(len(a), len(b))
    while lo < n and a[lo] == b[lo]:
        lo += 1
    a, b = a[lo:], b[lo:]
    while a and b and a[-1] == b[-1]:
        a, b = a[:-1], b[:-1]
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def edit_distance(a: str, b: str, classes: bool = True) -> int:
    """Levenshtein distance where confusable characters substitute for free.

    Class membership is an equivalence relation, so mapping every character to
    its class representative and running the unit-cost recurrence is exact.
    """
    if classes:
        a, b = canonical(a), canonical(b)
    return levenshtein(a, b)


@lru_cache(maxsize=1 << 16)
def kernel_similarity(k1: str, k2: str) -> float:
    if not k1 and not k2:
        return 1.0
    if not k1 or not k2:
        return 0.0
    return 1.0 - edit_distance(k1, k2) / max(len(k1), len(k2))


def coeff_ocr(w1: TextPoint, w2: TextPoint) -> float:
    return kernel_similarity(w1.kernel, w2.kernel)


def words_coordinated(w1: TextPoint, w2: TextPoint, p: MatchParams) -> bool:
    return coeff_ocr(w1, w2) > p.word_ocr_simil


def align_sequences(n: int, m: int, score) -> list[tuple[int, int, float]]:
    """Order-preserving matching maximizing (pair count, total score).

    ``score(i, j)`` returns a float for an admissible pair or None.
    """
    # best[i][j] = (count, total) over prefixes a[:i], b[:j]
    best = [[(0, 0.0)] * (m + 1) for _ in range(n + 1)]
    move = [[0] * (m + 1) for _ in range(n + 1)]
    cache = {}
    for i in range(1, n + 1):
        row, prev_row = best[i], best[i - 1]
        for j in range(1, m + 1):
            cand = prev_row[j]
            mv = 1  # skip a[i-1]
            if row[j - 1] > cand:
                cand, mv = row[j - 1], 2  # skip b[j-1]
            s = score(i - 1, j - 1)
            if s is not None:
                cache[i - 1, j - 1] = s
                c, t = prev_row[j - 1]
                diag = (c + 1, t + s)
                if diag >= cand:
                    cand, mv = diag, 3
            row[j] = cand
            move[i][j] = mv
    pairs = []
    i, j = n, m
    while i > 0 and j > 0:
        mv = move[i][j]
        if mv == 3:
            pairs.append((i - 1, j - 1, cache[i - 1, j - 1]))
            i, j = i - 1, j - 1
        elif mv == 1:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def align_words(ref_line, test_line, p: MatchParams) -> WordAlignment:
    def score(i, j):
        c = coeff_ocr(ref_line[i], test_line[j])
        return c if c > p.word_ocr_simil else None

    pairs = align_sequences(len(ref_line), len(test_line), score)
    used_r = {i for i, _, _ in pairs}
    used_t = {j for _, j, _ in pairs}
    return WordAlignment(
        pairs=pairs,
        ref_only=[i for i in range(len(ref_line)) if i not in used_r],
        test_only=[j for j in range(len(test_line)) if j not in used_t],
    )


def line_similarity(ref_line, test_line, p: MatchParams) -> float:
    if not ref_line and not test_line:
        return 1.0
    pairs = align_words(ref_line, test_line, p).pairs
    return len(pairs) / max(len(ref_line), len(test_line))


def align_lines(ref_doc: DocumentText, test_doc: DocumentText, p: MatchParams) -> LineAlignment:
    ref_lines = [line.words for line in ref_doc.lines]
    test_lines = [line.words for line in test_doc.lines]

    def score(i, j):
        s = line_similarity(ref_lines[i], test_lines[j], p)
        return s if s > p.line_simil else None

    matched = align_sequences(len(ref_lines), len(test_lines), score)
    used_r = {i for i, _, _ in matched}
    used_t = {j for _, j, _ in matched}
    return LineAlignment(
        pairs=[(i, j) for i, j, _ in matched],
        ref_only=[i for i in range(len(ref_lines)) if i not in used_r],
        test_only=[j for j in range(len(test_lines)) if j not in used_t],
        similarity=[s for _, _, s in matched],
    )
