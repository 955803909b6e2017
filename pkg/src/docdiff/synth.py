"""Seeded synthetic document pairs with known modifications.

Pages are rendered with the built-in bitmap font, so every word box is known
exactly.  The generator writes the hOCR an ideal OCR engine would produce for
both pages (optionally corrupting the test side with recognition errors) so
the whole comparison pipeline can run without an external engine.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .diff import ModificationKind
from .evaluation import GroundTruth, TruthEntry, aggregate_chars_to_words
from .font import GLYPH_ROWS, glyph_distance, render_text, text_width
from .ocr import DocumentText, TextLine, TextPoint, document_to_hocr
from .segment import Box, LineLayout, PageLayout, union_all
from .textmatch import canonical, kernel_similarity

EDIT_KINDS = {
    "substitute_chars": ModificationKind.WORD_CHANGED,
    "replace_word": ModificationKind.WORD_CHANGED,
    "insert_word": ModificationKind.WORD_INSERTED,
    "delete_word": ModificationKind.WORD_DELETED,
    "insert_line": ModificationKind.LINE_INSERTED,
    "delete_line": ModificationKind.LINE_DELETED,
}

VOCAB = (
    "SALAIRE BRUT NET COTISATION RETRAITE MALADIE CHOMAGE PRIME CONGES HEURES TAUX "
    "MONTANT BASE TOTAL EMPLOYEUR SALARIE PERIODE NOM PRENOM ADRESSE SIRET CODE NAF "
    "EMPLOI ECHELON COEFF INDEMNITE TRANSPORT REPAS MUTUELLE PREVOYANCE CSG CRDS "
    "URSSAF AGIRC ARRCO PLAFOND TRANCHE ABSENCE AVANTAGE NATURE LOGEMENT ACOMPTE "
    "PAYER IMPOSABLE CUMUL ANNUEL MENSUEL BULLETIN PAIE SOCIETE SERVICE CADRE "
    "OUVRIER VIREMENT BANQUE DATE ENTREE ANCIENNETE RUBRIQUE RETENUE GAIN NUMERO "
    "CONVENTION CATEGORIE POSTE VILLE RUE DEPART SORTIE FORFAIT JOURS ASSIETTE"
).split()

LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
DIGITS = "0123456789"
# recognition errors that leave the image untouched; not neutralized by kernel rules
CONFUSIONS = {"M": "RN", "E": "C", "S": "5", "B": "8", "H": "B", "U": "V",
              "G": "6", "Z": "2", "D": "O", "N": "H", "R": "K", "T": "7"}
MIN_GLYPH_DISTANCE = 8


@dataclass(frozen=True)
class EditSpec:
    kind: str
    count: int = 1

    def __post_init__(self):
        if self.kind not in EDIT_KINDS:
            raise ValueError(f"unknown edit kind {self.kind!r}; expected one of {sorted(EDIT_KINDS)}")
        if self.count < 0:
            raise ValueError("edit count must be non-negative")


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    lines: int = 10
    words_per_line: tuple[int, int] = (4, 7)
    edits: tuple[EditSpec, ...] = ()
    jitter: int = 0
    noise: float = 0.0
    case_flip_rate: float = 0.0
    o0_swap_rate: float = 0.0
    confusion_rate: float = 0.0
    scale: int = 2
    margin: int = 20
    category: str = "synthetic"

    def __post_init__(self):
        object.__setattr__(self, "words_per_line", tuple(self.words_per_line))
        object.__setattr__(self, "edits", tuple(
            e if isinstance(e, EditSpec) else EditSpec(**e) for e in self.edits))
        lo, hi = self.words_per_line
        if not 1 <= lo <= hi:
            raise ValueError("words_per_line must be a range 1 <= lo <= hi")
        if self.lines < 1 or self.scale < 1:
            raise ValueError("lines and scale must be positive")
        if self.jitter < 0 or not 0 <= self.jitter < self.margin:
            raise ValueError("jitter must be non-negative and smaller than the margin")
        for name in ("noise", "case_flip_rate", "o0_swap_rate", "confusion_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        line_edits = sum(e.count for e in self.edits if e.kind != "insert_line")
        if line_edits > self.lines:
            raise ValueError("at most one edit per line: too many edits for the line count")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["words_per_line"] = list(self.words_per_line)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown synth keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class SynthPair:
    ref_img: np.ndarray
    test_img: np.ndarray
    truth: GroundTruth
    ref_hocr: str
    test_hocr: str
    spec: SynthSpec


@dataclass
class _Word:
    text: str
    changed: tuple[int, ...] = ()  # substituted character positions
    kind: ModificationKind | None = None


@dataclass
class _Line:
    words: list[_Word]
    inserted: bool = False
    ref_index: int | None = None


@dataclass
class _Rendered:
    boxes: list[list[Box]]
    char_boxes: list[list[list[Box]]]
    line_boxes: list[Box] = field(default_factory=list)


class _Tokens:
    """Draws page-unique tokens: vocabulary words, amounts, dates and codes."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: set[str] = set()

    def _candidate(self) -> str:
        r = self.rng.random()
        if r < 0.6:
            return self.rng.choice(VOCAB)
        if r < 0.8:
            return f"{self.rng.randint(10, 9999)},{self.rng.randint(0, 99):02d}"
        if r < 0.9:
            return f"{self.rng.randint(1, 28):02d}/{self.rng.randint(1, 12):02d}/{self.rng.randint(0, 99):02d}"
        return "".join(self.rng.choice(LETTERS) for _ in range(2)) + str(self.rng.randint(100, 999))

    def _fresh(self, tok: str) -> bool:
        # distinct even after kernel folding, and never close to another token
        c = canonical(tok.lower())
        return all(kernel_similarity(c, canonical(u.lower())) < 0.5 for u in self.used)

    def draw(self, min_len: int = 1) -> str:
        for _ in range(1000):
            tok = self._candidate()
            if len(tok) >= min_len and self._fresh(tok):
                self.used.add(tok)
                return tok
        raise RuntimeError("token pool exhausted")


def _substitute(word: str, rng: random.Random) -> tuple[str, int] | None:
    positions = [i for i, ch in enumerate(word) if ch.isalnum()]
    rng.shuffle(positions)
    for i in positions:
        ch = word[i]
        pool = LETTERS if ch.isalpha() else DIGITS
        options = [c for c in pool
                   if canonical(c.lower()) != canonical(ch.lower()) and glyph_distance(c, ch) >= MIN_GLYPH_DISTANCE]
        if options:
            return word[:i] + rng.choice(options) + word[i + 1:], i
    return None


def _build(spec: SynthSpec, rng: random.Random):
    tokens = _Tokens(rng)
    lo, hi = spec.words_per_line
    ref = [[tokens.draw() for _ in range(rng.randint(lo, hi))] for _ in range(spec.lines)]
    test = [_Line([_Word(t) for t in words], ref_index=i) for i, words in enumerate(ref)]

    edits = [e.kind for e in spec.edits for _ in range(e.count)]
    rng.shuffle(edits)
    free = list(range(spec.lines))
    rng.shuffle(free)
    deleted_lines: list[int] = []
    inserted_after: list[int] = []
    for kind in edits:
        if kind == "insert_line":
            inserted_after.append(rng.randint(-1, spec.lines - 1))
            continue
        li = free.pop()
        line = test[li]
        if kind == "delete_line":
            deleted_lines.append(li)
        elif kind == "insert_word":
            pos = rng.randint(0, len(line.words))
            line.words.insert(pos, _Word(tokens.draw(min_len=3), kind=ModificationKind.WORD_INSERTED))
        elif kind == "delete_word":
            pos = rng.randrange(len(line.words))
            line.words[pos].kind = ModificationKind.WORD_DELETED
        elif kind == "replace_word":
            pos = rng.randrange(len(line.words))
            line.words[pos] = _Word(tokens.draw(), kind=ModificationKind.WORD_CHANGED)
        else:  # substitute_chars
            order = list(range(len(line.words)))
            rng.shuffle(order)
            for pos in order:
                w = line.words[pos].text
                sub = _substitute(w, rng) if len(w) >= 3 else None
                if sub is not None and sub[0] not in tokens.used:
                    tokens.used.add(sub[0])
                    line.words[pos] = _Word(sub[0], (sub[1],), ModificationKind.WORD_CHANGED)
                    break
            else:
                raise RuntimeError("no substitutable word on the chosen line")

    lines = [ln for ln in test if ln.ref_index not in deleted_lines]
    for after in sorted(inserted_after, reverse=True):
        new = _Line([_Word(tokens.draw()) for _ in range(rng.randint(lo, hi))], inserted=True)
        # insert after the surviving line that came from reference index `after`
        at = next((k + 1 for k, ln in enumerate(lines) if ln.ref_index == after), None)
        if at is None:
            at = sum(1 for ln in lines if ln.ref_index is not None and ln.ref_index < after)
        lines.insert(at, new)
    return ref, lines, sorted(deleted_lines)


def _render(rows: list[list[str]], size, spec: SynthSpec, jitter_rng: random.Random | None):
    w, h = size
    canvas = np.full((h, w), 255, dtype=np.uint8)
    pitch = 12 * spec.scale
    gap = 5 * spec.scale
    out = _Rendered([], [])
    for li, words in enumerate(rows):
        x = spec.margin
        y = spec.margin + li * pitch
        line_boxes, line_chars = [], []
        for text in words:
            dx = dy = 0
            if jitter_rng is not None and spec.jitter:
                dx = jitter_rng.randint(-spec.jitter, spec.jitter)
                dy = jitter_rng.randint(-spec.jitter, spec.jitter)
            chars = [Box(*b) for b in render_text(canvas, text, x + dx, y + dy, spec.scale)]
            line_chars.append(chars)
            line_boxes.append(union_all(chars))
            x += text_width(text, spec.scale) + gap
        out.boxes.append(line_boxes)
        out.char_boxes.append(line_chars)
        out.line_boxes.append(union_all(line_boxes) if line_boxes else None)
    return canvas, out


def _page_size(spec: SynthSpec, *row_sets) -> tuple[int, int]:
    gap = 5 * spec.scale
    width = max(sum(text_width(t, spec.scale) for t in words) + gap * (len(words) - 1)
                for rows in row_sets for words in rows if words)
    n = max(len(rows) for rows in row_sets)
    return (width + 2 * spec.margin, (n - 1) * 12 * spec.scale + GLYPH_ROWS * spec.scale + 2 * spec.margin)


def _perturb(text: str, spec: SynthSpec, rng: random.Random) -> str:
    out = []
    for ch in text:
        if spec.confusion_rate and ch in CONFUSIONS and rng.random() < spec.confusion_rate:
            ch = CONFUSIONS[ch]
        if spec.o0_swap_rate and ch in "O0" and rng.random() < spec.o0_swap_rate:
            ch = "0" if ch == "O" else "O"
        if spec.case_flip_rate and ch.isalpha() and rng.random() < spec.case_flip_rate:
            ch = ch.swapcase()
        out.append(ch)
    return "".join(out)


def _hocr(rows, rendered: _Rendered, size, transform=None) -> str:
    lines = []
    for words, boxes in zip(rows, rendered.boxes):
        if not words:
            continue
        pts = [TextPoint.from_raw(transform(t) if transform else t, b, 0.95) for t, b in zip(words, boxes)]
        lines.append(TextLine(union_all(boxes), pts))
    return document_to_hocr(DocumentText(lines, size))


def generate_pair(spec: SynthSpec) -> SynthPair:
    """Render a reference page and an edited test page with their truth and hOCR."""
    rng = random.Random(spec.seed)
    ref_rows, test_lines, deleted = _build(spec, rng)
    test_rows = [[w.text for w in ln.words if w.kind != ModificationKind.WORD_DELETED] for ln in test_lines]
    size = _page_size(spec, ref_rows, test_rows)

    ref_img, ref_r = _render(ref_rows, size, spec, None)
    jitter_rng = random.Random(rng.getrandbits(64))
    test_img, test_r = _render(test_rows, size, spec, jitter_rng)

    entries: list[TruthEntry] = []
    for li in deleted:
        entries.append(TruthEntry(ref_r.line_boxes[li], ModificationKind.LINE_DELETED, "ref"))
    for ti, ln in enumerate(test_lines):
        if ln.inserted:
            entries.append(TruthEntry(test_r.line_boxes[ti], ModificationKind.LINE_INSERTED, "test"))
            continue
        wi = 0  # index among rendered test words
        layout = PageLayout([LineLayout(test_r.line_boxes[ti], test_r.boxes[ti])])
        for ri, w in enumerate(ln.words):
            if w.kind == ModificationKind.WORD_DELETED:
                k = sum(1 for x in ln.words[:ri] if x.kind != ModificationKind.WORD_INSERTED)
                entries.append(TruthEntry(ref_r.boxes[ln.ref_index][k], w.kind, "ref"))
                continue
            if w.changed:
                chars = [test_r.char_boxes[ti][wi][c] for c in w.changed]
                for box in aggregate_chars_to_words(chars, layout):
                    entries.append(TruthEntry(box, w.kind, "test"))
            elif w.kind is not None:
                entries.append(TruthEntry(test_r.boxes[ti][wi], w.kind, "test"))
            wi += 1

    if spec.noise:
        nrng = np.random.default_rng(spec.seed)
        n = int(round(spec.noise * test_img.size))
        idx = nrng.choice(test_img.size, size=n, replace=False)
        test_img.flat[idx] = np.where(nrng.random(n) < 0.5, 0, 255).astype(np.uint8)

    perturb_rng = random.Random(rng.getrandbits(64))
    return SynthPair(
        ref_img=ref_img,
        test_img=test_img,
        truth=GroundTruth(entries, size),
        ref_hocr=_hocr(ref_rows, ref_r, size),
        test_hocr=_hocr(test_rows, test_r, size, lambda t: _perturb(t, spec, perturb_rng)),
        spec=spec,
    )


# --- corpora -------------------------------------------------------------------

def pair_seed(seed: int, index: int) -> int:
    return (seed * 1_000_003 + index) % (1 << 32)


def corpus_specs(base: SynthSpec, pairs: int) -> list[SynthSpec]:
    """``pairs`` variants of ``base`` with derived per-pair seeds."""
    return [SynthSpec.from_dict({**base.to_dict(), "seed": pair_seed(base.seed, i)}) for i in range(pairs)]


def write_pair(pair: SynthPair, out_dir, name: str) -> Path:
    """Materialize one pair in the corpus directory layout."""
    d = Path(out_dir) / name
    d.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pair.ref_img).save(d / "ref.png")
    Image.fromarray(pair.test_img).save(d / "test.png")
    (d / "ref.hocr").write_text(pair.ref_hocr, encoding="utf-8")
    (d / "test.hocr").write_text(pair.test_hocr, encoding="utf-8")
    (d / "truth.json").write_text(pair.truth.to_json(), encoding="utf-8")
    meta = {"category": pair.spec.category, "spec": pair.spec.to_dict()}
    (d / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return d


def write_corpus(base: SynthSpec, pairs: int, out_dir) -> list[Path]:
    return [write_pair(generate_pair(s), out_dir, f"pair_{i:04d}")
            for i, s in enumerate(corpus_specs(base, pairs))]
