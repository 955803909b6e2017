"""End-to-end comparison of a reference page against a test page."""

from __future__ import annotations

import enum
import json
import logging
import statistics
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import BlankImage, BothBlank, DocDiffError, StageError
from .ocr import DocumentText, OcrEngineConfig, TextPoint, parse_hocr, run_ocr
from .pixmatch import PixParams, SearchRange, coeff_pix, crop_word
from .raster import auto_contrast, estimate_skew, load_image, rotate
from .segment import Box, union_all
from .textmatch import (
    MatchParams,
    WordAlignment,
    align_lines,
    align_sequences,
    align_words,
    kernel_similarity,
)

log = logging.getLogger(__name__)

MODES = ("combined", "ocr_only")
MERGE_OVERLAP = 0.5

BLUE = (0, 0, 255)
RED = (255, 0, 0)
MAGENTA = (255, 0, 255)


class ModificationKind(str, enum.Enum):
    WORD_CHANGED = "word_changed"
    WORD_INSERTED = "word_inserted"
    WORD_DELETED = "word_deleted"
    LINE_INSERTED = "line_inserted"
    LINE_DELETED = "line_deleted"

    @property
    def side(self) -> str:
        """Page whose box locates this modification for evaluation."""
        return "ref" if self in (ModificationKind.WORD_DELETED, ModificationKind.LINE_DELETED) else "test"

    @property
    def is_line(self) -> bool:
        return self in (ModificationKind.LINE_INSERTED, ModificationKind.LINE_DELETED)

    def swapped(self) -> "ModificationKind":
        return _SWAP.get(self, self)


_SWAP = {
    ModificationKind.WORD_INSERTED: ModificationKind.WORD_DELETED,
    ModificationKind.WORD_DELETED: ModificationKind.WORD_INSERTED,
    ModificationKind.LINE_INSERTED: ModificationKind.LINE_DELETED,
    ModificationKind.LINE_DELETED: ModificationKind.LINE_INSERTED,
}


# (line index, word indices); an empty word tuple stands for the whole line
Position = tuple[int, tuple[int, ...]]


@dataclass(frozen=True)
class Modification:
    kind: ModificationKind
    ref_box: Box | None = None
    test_box: Box | None = None
    ref_kernel: str | None = None
    test_kernel: str | None = None
    line_index: int = 0
    word_index: int | None = None
    coeff_ocr: float | None = None
    coeff_pix: float | None = None
    ref_pos: Position | None = None
    test_pos: Position | None = None

    def __post_init__(self):
        k = self.kind
        if k == ModificationKind.WORD_CHANGED:
            ok = self.ref_box is not None and self.test_box is not None
        elif k.side == "ref":
            ok = self.ref_box is not None and self.test_box is None
        else:
            ok = self.test_box is not None and self.ref_box is None
        if not ok:
            raise ValueError(f"{k.value} modification has inconsistent boxes")

    @property
    def box(self) -> Box:
        return self.ref_box if self.kind.side == "ref" else self.test_box


@dataclass(frozen=True)
class CoordinatedPair:
    ref: TextPoint
    test: TextPoint
    coeff_ocr: float
    coeff_pix: float | None = None
    ref_pos: Position | None = None
    test_pos: Position | None = None


@dataclass
class DiffConfig:
    match: MatchParams = field(default_factory=MatchParams)
    pix: PixParams = field(default_factory=PixParams)
    deskew: bool = True
    deskew_max_angle: float = 5.0
    deskew_step: float = 0.1
    contrast_low: float = 0.01
    contrast_high: float = 0.99
    ocr: OcrEngineConfig = field(default_factory=OcrEngineConfig)
    mode: str = "combined"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.deskew_step <= self.deskew_max_angle <= 15:
            raise ValueError("deskew range needs 0 < step <= max_angle <= 15")
        if not 0.0 <= self.contrast_low < self.contrast_high <= 1.0:
            raise ValueError("auto-contrast percentiles need 0 <= low < high <= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ocr"]["extra_args"] = list(self.ocr.extra_args)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DiffConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "match" in d:
            d["match"] = MatchParams(**d["match"])
        if "pix" in d:
            pix = dict(d["pix"])
            if "range" in pix:
                pix["range"] = SearchRange(**pix["range"])
            d["pix"] = PixParams(**pix)
        if "ocr" in d:
            d["ocr"] = OcrEngineConfig(**d["ocr"])
        return cls(**d)


@dataclass
class ComparisonReport:
    modifications: list[Modification]
    coordinated: list[CoordinatedPair]
    params: dict
    ref_page: tuple[int, int]
    test_page: tuple[int, int]
    # preprocessed pages the boxes refer to; not serialized
    ref_image: np.ndarray | None = field(default=None, repr=False, compare=False)
    test_image: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def coordinated_count(self) -> int:
        return len(self.coordinated)


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (DocDiffError, OSError, ValueError) as exc:
        raise StageError(name, exc) from exc


# --- split/merge repair ----------------------------------------------------

def line_offset(ref_line, test_line, pairs) -> int:
    """Horizontal displacement of the test line relative to the reference line."""
    if pairs:
        return int(round(statistics.median(test_line[j].box.x - ref_line[i].box.x
                                           for i, j, _ in pairs)))
    if ref_line and test_line:
        return union_all(w.box for w in test_line).x - union_all(w.box for w in ref_line).x
    return 0


def _x_iou(a: Box, b: Box) -> float:
    inter = a.x_overlap(b)
    return inter / (a.w + b.w - inter)


def merge_words(words) -> TextPoint:
    return TextPoint.from_raw(" ".join(w.raw for w in words), union_all(w.box for w in words),
                              min(w.confidence for w in words))


def repair_split_merge(ref_line, test_line, alignment: WordAlignment,
                       p: MatchParams) -> WordAlignment:
    """Re-join words that segmentation split in two.

    An unmatched word and its right-hand neighbour on the same side are merged
    when their concatenation coordinates with one counterpart word that the
    merged box covers horizontally by at least half.  The test side is scanned
    first, then the reference side, each in one left-to-right pass.
    """
    pairs = list(alignment.pairs)
    merged = list(alignment.merged)
    ref_only = list(alignment.ref_only)
    test_only = list(alignment.test_only)
    dx = line_offset(ref_line, test_line, pairs)

    for side in ("test", "ref"):
        words, others = (test_line, ref_line) if side == "test" else (ref_line, test_line)
        own_only = test_only if side == "test" else ref_only
        other_only = ref_only if side == "test" else test_only
        shift = -dx if side == "test" else dx  # moves own boxes into the other frame
        k = 0
        while k + 1 < len(words):
            u, v = k, k + 1
            partner = {(j if side == "test" else i): (i if side == "test" else j) for i, j, _ in pairs}
            if (u not in own_only and v not in own_only) or any(
                    u in grp or v in grp for grp in _own_groups(merged, side)):
                k += 1
                continue
            cand = [partner[x] for x in (u, v) if x in partner]
            if not cand:
                cand = [c for c in other_only if _order_ok(pairs, side, u, v, c)]
            joined = merge_words([words[u], words[v]])
            jbox = joined.box.shifted(shift, 0)
            best = None
            for c in cand:
                coeff = kernel_similarity(joined.kernel, others[c].kernel)
                if coeff > p.word_ocr_simil and _x_iou(jbox, others[c].box) >= MERGE_OVERLAP:
                    if best is None or coeff > best[1]:
                        best = (c, coeff)
            if best is None:
                k += 1
                continue
            c, coeff = best
            pairs = [pr for pr in pairs if (pr[1] if side == "test" else pr[0]) not in (u, v)]
            for x in (u, v):
                if x in own_only:
                    own_only.remove(x)
            if c in other_only:
                other_only.remove(c)
            merged.append(((c,), (u, v), coeff) if side == "test" else ((u, v), (c,), coeff))
            k += 2
    merged.sort(key=lambda g: (g[0][0], g[1][0]))
    return WordAlignment(pairs=pairs, ref_only=sorted(ref_only), test_only=sorted(test_only),
                         merged=merged)


def _own_groups(merged, side):
    return [g[1] if side == "test" else g[0] for g in merged]


def _order_ok(pairs, side, u, v, c) -> bool:
    """Counterpart c must sit between the partners of the matched neighbours of u..v."""
    for i, j, _ in pairs:
        own, other = (j, i) if side == "test" else (i, j)
        if own < u and other >= c:
            return False
        if own > v and other <= c:
            return False
    return True


# --- positional pairing of leftovers ---------------------------------------

def _anchors(wa: WordAlignment):
    out = [((i,), (j,)) for i, j, _ in wa.pairs] + [(r, t) for r, t, _ in wa.merged]
    return sorted(out)


def positional_pairs(ref_line, test_line, wa: WordAlignment):
    """Pair leftover words that occupy the same place between coordinated anchors."""
    dx = line_offset(ref_line, test_line, wa.pairs)
    ref_left, test_left = set(wa.ref_only), set(wa.test_only)
    bounds = [((-1,), (-1,))] + _anchors(wa) + [((len(ref_line),), (len(test_line),))]
    out = []
    for (r0, t0), (r1, t1) in zip(bounds, bounds[1:]):
        rs = [i for i in range(max(r0) + 1, min(r1)) if i in ref_left]
        ts = [j for j in range(max(t0) + 1, min(t1)) if j in test_left]
        if not rs or not ts:
            continue

        def score(a, b):
            ov = ref_line[rs[a]].box.shifted(dx, 0).x_overlap(test_line[ts[b]].box)
            return float(ov) if ov > 0 else None

        out += [(rs[a], ts[b]) for a, b, _ in align_sequences(len(rs), len(ts), score)]
    return out


# --- pipeline ----------------------------------------------------------------

def preprocess(img, cfg: DiffConfig) -> np.ndarray:
    img = auto_contrast(img, cfg.contrast_low, cfg.contrast_high)
    if not cfg.deskew:
        return img
    try:
        est = estimate_skew(img, cfg.deskew_max_angle, cfg.deskew_step)
    except BlankImage:
        return img
    log.debug("skew %.2f deg (confidence %.2f)", est.angle, est.confidence)
    return rotate(img, -est.angle) if est.angle != 0 else img


def ocr_image(img: np.ndarray, cfg: OcrEngineConfig) -> DocumentText:
    with tempfile.TemporaryDirectory(prefix="docdiff-") as tmp:
        path = Path(tmp) / "page.png"
        Image.fromarray(img).save(path)
        return parse_hocr(run_ocr(path, cfg))


def compare_documents(ref_path, test_path, cfg: DiffConfig | None = None,
                      hocr_ref=None, hocr_test=None) -> ComparisonReport:
    """Compare two page images on disk.

    ``hocr_ref``/``hocr_test`` name ready hOCR files to use instead of running
    the OCR engine; their boxes must refer to the preprocessed (deskewed) page.
    """
    cfg = cfg or DiffConfig()
    with stage("load"):
        ref_img = load_image(ref_path)
        test_img = load_image(test_path)
    with stage("ocr"):
        ref_hocr = Path(hocr_ref).read_text(encoding="utf-8") if hocr_ref else None
        test_hocr = Path(hocr_test).read_text(encoding="utf-8") if hocr_test else None
    return compare_images(ref_img, test_img, cfg, ref_hocr, test_hocr)


def compare_images(ref_img, test_img, cfg: DiffConfig | None = None,
                   ref_hocr: str | None = None, test_hocr: str | None = None) -> ComparisonReport:
    cfg = cfg or DiffConfig()
    with stage("preprocess"):
        ref_pp = preprocess(ref_img, cfg)
        test_pp = preprocess(test_img, cfg)
    with stage("ocr"):
        ref_doc = parse_hocr(ref_hocr) if ref_hocr is not None else ocr_image(ref_pp, cfg.ocr)
        test_doc = parse_hocr(test_hocr) if test_hocr is not None else ocr_image(test_pp, cfg.ocr)
    return compare_texts(ref_pp, test_pp, ref_doc, test_doc, cfg)


def _clip(box: Box, img: np.ndarray) -> Box | None:
    h, w = img.shape
    x0, y0 = max(0, box.x), max(0, box.y)
    x1, y1 = min(w, box.x1), min(h, box.y1)
    if x1 <= x0 or y1 <= y0:
        return None
    return Box.from_corners(x0, y0, x1, y1)


def pixel_coefficient(ref_img, test_img, ref_box: Box, test_box: Box, p: PixParams) -> float | None:
    rb, tb = _clip(ref_box, ref_img), _clip(test_box, test_img)
    if rb is None or tb is None:
        return None
    try:
        return coeff_pix(crop_word(ref_img, rb, p.binary), crop_word(test_img, tb, p.binary), p.range)
    except BothBlank:
        return None


def compare_texts(ref_img, test_img, ref_doc: DocumentText, test_doc: DocumentText,
                  cfg: DiffConfig) -> ComparisonReport:
    """Coordinate lines and words of two recognized pages and list modifications."""
    mods: list[Modification] = []
    coordinated: list[CoordinatedPair] = []
    with stage("align"):
        la = align_lines(ref_doc, test_doc, cfg.match)

    def line_mod(kind, li, doc):
        line = doc.lines[li]
        text = " ".join(w.kernel for w in line.words)
        if kind == ModificationKind.LINE_DELETED:
            return Modification(kind, ref_box=line.line_box, ref_kernel=text, line_index=li,
                                ref_pos=(li, ()))
        return Modification(kind, test_box=line.line_box, test_kernel=text, line_index=li,
                            test_pos=(li, ()))

    i = j = 0
    for ri, ti in la.pairs + [(len(ref_doc.lines), len(test_doc.lines))]:
        mods += [line_mod(ModificationKind.LINE_DELETED, k, ref_doc) for k in range(i, ri)]
        mods += [line_mod(ModificationKind.LINE_INSERTED, k, test_doc) for k in range(j, ti)]
        i, j = ri + 1, ti + 1
        if ri == len(ref_doc.lines):
            break
        with stage("align"):
            rl, tl = ref_doc.lines[ri].words, test_doc.lines[ti].words
            wa = align_words(rl, tl, cfg.match)
            wa = repair_split_merge(rl, tl, wa, cfg.match)
            positional = positional_pairs(rl, tl, wa)
        line_mods, line_coord = _word_events(ref_img, test_img, ri, ti, rl, tl, wa, positional, cfg)
        mods += line_mods
        coordinated += line_coord

    report = ComparisonReport(mods, coordinated, cfg.to_dict(),
                              tuple(ref_doc.page_size), tuple(test_doc.page_size), ref_img, test_img)
    check_partition(report, ref_doc, test_doc)
    return report


def _word_events(ref_img, test_img, ri, ti, rl, tl, wa, positional, cfg):
    mods, coord = [], []
    events = []  # (ref index or -1, test index or -1, payload) for reading order
    for i, j, c in wa.pairs:
        events.append(((i, j), CoordinatedPair(rl[i], tl[j], c, None, (ri, (i,)), (ti, (j,)))))
    for rs, ts, c in wa.merged:
        events.append(((rs[0], ts[0]), CoordinatedPair(
            merge_words([rl[k] for k in rs]), merge_words([tl[k] for k in ts]), c, None,
            (ri, tuple(rs)), (ti, tuple(ts)))))
    paired_r = {i for i, _ in positional}
    paired_t = {j for _, j in positional}
    for i, j in positional:
        c_ocr = kernel_similarity(rl[i].kernel, tl[j].kernel)
        c_pix = None
        if cfg.mode == "combined":
            with stage("pixel"):
                c_pix = pixel_coefficient(ref_img, test_img, rl[i].box, tl[j].box, cfg.pix)
            if c_pix is not None and c_pix < cfg.pix.word_pixel_coeff:
                events.append(((i, j), CoordinatedPair(rl[i], tl[j], c_ocr, c_pix, (ri, (i,)), (ti, (j,)))))
                continue
        events.append(((i, j), Modification(
            ModificationKind.WORD_CHANGED, ref_box=rl[i].box, test_box=tl[j].box,
            ref_kernel=rl[i].kernel, test_kernel=tl[j].kernel, line_index=ti, word_index=j,
            coeff_ocr=c_ocr, coeff_pix=c_pix, ref_pos=(ri, (i,)), test_pos=(ti, (j,)))))
    for i in wa.ref_only:
        if i not in paired_r:
            events.append(((i, -1), Modification(
                ModificationKind.WORD_DELETED, ref_box=rl[i].box, ref_kernel=rl[i].kernel,
                line_index=ri, word_index=i, ref_pos=(ri, (i,)))))
    for j in wa.test_only:
        if j not in paired_t:
            events.append(((-1, j), Modification(
                ModificationKind.WORD_INSERTED, test_box=tl[j].box, test_kernel=tl[j].kernel,
                line_index=ti, word_index=j, test_pos=(ti, (j,)))))
    events.sort(key=lambda e: _reading_key(e[0], wa))
    for _, ev in events:
        (coord if isinstance(ev, CoordinatedPair) else mods).append(ev)
    return mods, coord


def _reading_key(idx, wa):
    i, j = idx
    # order by test position where there is one, deletions just before the next test word
    if j >= 0:
        return (j, 1, i)
    later = [tj for ri, tj, _ in wa.pairs if ri > i] + [ts[0] for rs, ts, _ in wa.merged if rs[0] > i]
    return (min(later) if later else 1 << 30, 0, i)


def check_partition(report: ComparisonReport, ref_doc: DocumentText, test_doc: DocumentText) -> None:
    """Every word of both pages is covered exactly once by coordinated pairs or modifications."""
    for side, doc in (("ref", ref_doc), ("test", test_doc)):
        seen: dict[tuple[int, int], int] = {}
        positions = [getattr(c, f"{side}_pos") for c in report.coordinated]
        positions += [getattr(m, f"{side}_pos") for m in report.modifications]
        for pos in positions:
            if pos is None:
                continue
            li, words = pos
            for w in words or range(len(doc.lines[li].words)):
                seen[li, w] = seen.get((li, w), 0) + 1
        expected = {(li, w) for li, line in enumerate(doc.lines) for w in range(len(line.words))}
        if set(seen) != expected or any(n != 1 for n in seen.values()):
            raise AssertionError(f"{side} words not partitioned by the report")


# --- serialization -----------------------------------------------------------

def _box(b: Box | None):
    return None if b is None else b.as_list()


def _pos(p: Position | None):
    return None if p is None else [p[0], list(p[1])]


def _tp(t: TextPoint) -> dict:
    return {"raw": t.raw, "kernel": t.kernel, "box": t.box.as_list(), "confidence": t.confidence}


def report_to_dict(report: ComparisonReport) -> dict:
    return {
        "params": report.params,
        "pages": {"ref": list(report.ref_page), "test": list(report.test_page)},
        "modifications": [
            {
                "kind": m.kind.value,
                "ref_box": _box(m.ref_box),
                "test_box": _box(m.test_box),
                "ref_kernel": m.ref_kernel,
                "test_kernel": m.test_kernel,
                "line": m.line_index,
                "word": m.word_index,
                "coeff_ocr": m.coeff_ocr,
                "coeff_pix": m.coeff_pix,
                "ref_pos": _pos(m.ref_pos),
                "test_pos": _pos(m.test_pos),
            }
            for m in report.modifications
        ],
        "coordinated_count": report.coordinated_count,
        "coordinated": [
            {
                "ref": _tp(c.ref),
                "test": _tp(c.test),
                "coeff_ocr": c.coeff_ocr,
                "coeff_pix": c.coeff_pix,
                "ref_pos": _pos(c.ref_pos),
                "test_pos": _pos(c.test_pos),
            }
            for c in report.coordinated
        ],
    }


def report_to_json(report: ComparisonReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _unbox(v):
    return None if v is None else Box(*v)


def _unpos(v):
    return None if v is None else (int(v[0]), tuple(v[1]))


def report_from_json(text: str) -> ComparisonReport:
    d = json.loads(text)
    mods = [
        Modification(
            kind=ModificationKind(m["kind"]),
            ref_box=_unbox(m.get("ref_box")),
            test_box=_unbox(m.get("test_box")),
            ref_kernel=m.get("ref_kernel"),
            test_kernel=m.get("test_kernel"),
            line_index=m["line"],
            word_index=m.get("word"),
            coeff_ocr=m.get("coeff_ocr"),
            coeff_pix=m.get("coeff_pix"),
            ref_pos=_unpos(m.get("ref_pos")),
            test_pos=_unpos(m.get("test_pos")),
        )
        for m in d["modifications"]
    ]

    def tp(x):
        return TextPoint(x["kernel"], x["raw"], Box(*x["box"]), x.get("confidence", 0.0))

    coord = [
        CoordinatedPair(tp(c["ref"]), tp(c["test"]), c["coeff_ocr"], c.get("coeff_pix"),
                        _unpos(c.get("ref_pos")), _unpos(c.get("test_pos")))
        for c in d.get("coordinated", [])
    ]
    return ComparisonReport(mods, coord, d["params"], tuple(d["pages"]["ref"]), tuple(d["pages"]["test"]))


# --- annotation ----------------------------------------------------------------

ANNOTATION_GAP = 10
OUTLINE = 2


def _outline(canvas: np.ndarray, box: Box, x_off: int, color) -> None:
    h, w = canvas.shape[:2]
    x0, y0 = box.x + x_off - OUTLINE, box.y - OUTLINE
    x1, y1 = box.x1 + x_off + OUTLINE, box.y1 + OUTLINE  # exclusive
    xa, xb = max(0, x0), min(w, x1)
    ya, yb = max(0, y0), min(h, y1)
    if xa >= xb or ya >= yb:
        return
    for yy in (range(max(0, y0), min(h, y0 + OUTLINE)), range(max(0, y1 - OUTLINE), min(h, y1))):
        for y in yy:
            canvas[y, xa:xb] = color
    for xx in (range(max(0, x0), min(w, x0 + OUTLINE)), range(max(0, x1 - OUTLINE), min(w, x1))):
        for x in xx:
            canvas[ya:yb, x] = color


def render_annotation(ref_img, test_img, report: ComparisonReport, out_path=None) -> np.ndarray:
    """Side-by-side RGB overlay: reference left, test right.

    Blue outlines coordinated words, red word-level modifications, magenta
    inserted or deleted lines.  Written as PNG when ``out_path`` is given.
    """
    ref_img, test_img = np.asarray(ref_img), np.asarray(test_img)
    h = max(ref_img.shape[0], test_img.shape[0])
    off = ref_img.shape[1] + ANNOTATION_GAP
    canvas = np.full((h, off + test_img.shape[1], 3), 255, dtype=np.uint8)
    canvas[:ref_img.shape[0], :ref_img.shape[1]] = ref_img[..., None]
    canvas[:test_img.shape[0], off:] = test_img[..., None]
    for c in report.coordinated:
        _outline(canvas, c.ref.box, 0, BLUE)
        _outline(canvas, c.test.box, off, BLUE)
    for m in report.modifications:
        color = MAGENTA if m.kind.is_line else RED
        if m.ref_box is not None:
            _outline(canvas, m.ref_box, 0, color)
        if m.test_box is not None:
            _outline(canvas, m.test_box, off, color)
    if out_path is not None:
        Image.fromarray(canvas, "RGB").save(out_path)
    return canvas
