"""Ground truth, report-vs-truth matching and corpus experiments."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .segment import Box, PageLayout

log = logging.getLogger(__name__)

SIDES = ("ref", "test")


def _kind(value):
    from .diff import ModificationKind

    return value if isinstance(value, ModificationKind) else ModificationKind(value)


@dataclass(frozen=True)
class TruthEntry:
    box: Box
    kind: object  # ModificationKind
    side: str

    def __post_init__(self):
        object.__setattr__(self, "kind", _kind(self.kind))
        if self.side not in SIDES:
            raise ValueError(f"side must be 'ref' or 'test', got {self.side!r}")


@dataclass
class GroundTruth:
    entries: list[TruthEntry]
    page: tuple[int, int]

    def __post_init__(self):
        w, h = self.page
        for e in self.entries:
            if not e.box.within(w, h):
                raise ValueError(f"truth box {e.box} outside page {w}x{h}")

    def to_json(self) -> str:
        d = {
            "page": list(self.page),
            "entries": [{"box": e.box.as_list(), "kind": e.kind.value, "side": e.side} for e in self.entries],
        }
        return json.dumps(d, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        d = json.loads(text)
        try:
            entries = [TruthEntry(Box(*e["box"]), e["kind"], e["side"]) for e in d["entries"]]
            return cls(entries, tuple(d["page"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed truth file: {exc}") from exc


@dataclass
class EvalResult:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    matched: list[tuple[int, int]] = field(default_factory=list)  # (truth index, report index)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0

    def __add__(self, other: "EvalResult") -> "EvalResult":
        # matched indices are per pair and do not survive aggregation
        return EvalResult(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def aggregate_chars_to_words(char_boxes, layout: PageLayout) -> list[Box]:
    """Collapse character-level truth boxes onto the word boxes they overlap most.

    Characters overlapping no word pass through as their own entries.  Output
    follows the order in which words (or stray characters) are first hit.
    """
    words = [w for line in layout.lines for w in line.words]
    out: list[Box] = []
    seen: set[int] = set()
    for c in char_boxes:
        best, best_area = None, 0
        for k, w in enumerate(words):
            a = c.intersection_area(w)
            if a > best_area:
                best, best_area = k, a
        if best is None:
            out.append(c)
        elif best not in seen:
            seen.add(best)
            out.append(words[best])
    return out


def match_report(report, truth: GroundTruth, iou_threshold: float = 0.5) -> EvalResult:
    """Greedy one-to-one matching of report modifications to truth entries by IoU."""
    if not 0 < iou_threshold <= 1:
        raise ValueError("iou_threshold must lie in (0, 1]")
    mods = report.modifications
    cand = []
    for ti, t in enumerate(truth.entries):
        for ri, m in enumerate(mods):
            if m.kind.side != t.side:
                continue
            iou = t.box.iou(m.box)
            if iou >= iou_threshold:
                # content-based tie-break keeps the result independent of report order
                cand.append((-iou, m.kind != t.kind, ti, m.box.as_list(), m.kind.value, ri))
    cand.sort()
    used_t, used_r, matched = set(), set(), []
    for _, _, ti, _, _, ri in cand:
        if ti in used_t or ri in used_r:
            continue
        used_t.add(ti)
        used_r.add(ri)
        matched.append((ti, ri))
    tp = len(matched)
    return EvalResult(tp, len(mods) - tp, len(truth.entries) - tp, sorted(matched))


# --- experiments ---------------------------------------------------------------

@dataclass
class PairResult:
    name: str
    category: str
    result: EvalResult | None
    error: str | None = None


@dataclass
class CategoryRow:
    category: str
    pairs: int
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return EvalResult(self.tp, self.fp, self.fn).precision

    @property
    def recall(self) -> float:
        return EvalResult(self.tp, self.fp, self.fn).recall


@dataclass
class ExperimentResult:
    total: EvalResult
    pairs: list[PairResult]
    table: list[CategoryRow]

    @property
    def errored(self) -> list[PairResult]:
        return [p for p in self.pairs if p.error is not None]


def _eval_spec(args):
    from .diff import compare_images
    from .synth import generate_pair

    spec, cfg, iou = args
    pair = generate_pair(spec)
    report = compare_images(pair.ref_img, pair.test_img, cfg, pair.ref_hocr, pair.test_hocr)
    return match_report(report, pair.truth, iou)


def _eval_dir(args):
    from .diff import compare_documents

    d, cfg, iou = args
    d = Path(d)
    truth = GroundTruth.from_json((d / "truth.json").read_text(encoding="utf-8"))
    hocr_ref = d / "ref.hocr"
    hocr_test = d / "test.hocr"
    report = compare_documents(d / "ref.png", d / "test.png", cfg,
                               hocr_ref if hocr_ref.exists() else None,
                               hocr_test if hocr_test.exists() else None)
    return match_report(report, truth, iou)


def _safe(fn, args):
    try:
        return fn(args), None
    except Exception as exc:  # per-pair failures are recorded, not fatal
        return None, f"{type(exc).__name__}: {exc}"


def _run_one(job):
    fn, args = job
    return _safe(fn, args)


def list_corpus(corpus_dir) -> list[Path]:
    root = Path(corpus_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    pairs = sorted(p for p in root.iterdir() if p.is_dir() and (p / "ref.png").exists())
    if not pairs:
        raise ValueError(f"no pair directories under {root}")
    return pairs


def _category(d: Path) -> str:
    try:
        return json.loads((d / "meta.json").read_text(encoding="utf-8")).get("category", "default")
    except (OSError, ValueError):
        return "default"


def run_experiment(corpus, cfg, iou: float = 0.5, jobs: int = 1) -> ExperimentResult:
    """Evaluate every pair of a corpus and micro-average over it.

    ``corpus`` is a list of SynthSpec (generated in memory) or a directory in the
    corpus layout.  Pairs that raise are flagged and left out of the totals.
    """
    if isinstance(corpus, (str, Path)):
        dirs = list_corpus(corpus)
        jobs_list = [(_eval_dir, (d, cfg, iou)) for d in dirs]
        names = [d.name for d in dirs]
        cats = [_category(d) for d in dirs]
    else:
        corpus = list(corpus)
        if not corpus:
            raise ValueError("corpus is empty")
        jobs_list = [(_eval_spec, (s, cfg, iou)) for s in corpus]
        names = [f"seed_{s.seed}" for s in corpus]
        cats = [s.category for s in corpus]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_one, jobs_list))
    else:
        outcomes = [_run_one(j) for j in jobs_list]

    pairs = []
    total = EvalResult()
    rows: dict[str, CategoryRow] = {}
    for name, cat, (res, err) in zip(names, cats, outcomes):
        pairs.append(PairResult(name, cat, res, err))
        if err is not None:
            log.warning("pair %s failed: %s", name, err)
            continue
        total = total + res
        row = rows.setdefault(cat, CategoryRow(cat, 0, 0, 0, 0))
        row.pairs += 1
        row.tp += res.tp
        row.fp += res.fp
        row.fn += res.fn
    return ExperimentResult(total, pairs, [rows[k] for k in sorted(rows)])
