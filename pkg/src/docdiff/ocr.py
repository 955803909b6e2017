"""Text feature points: OCR engine invocation, hOCR parsing and kernel normalization."""

from __future__ import annotations

import logging
import re
import shutil
import subprocess
import tempfile
import unicodedata
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from .errors import EngineFailed, EngineNotFound, MalformedHocr, MissingBbox, OcrTimeout
from .segment import Box, union_all

log = logging.getLogger(__name__)

DASHES = "-­‐‑‒–—―−⁃﹘﹣－"
QUOTES = "'\"`´‘’‚‛“”„‟«»‹›′″＂＇"
DIGIT_CONTEXT_PUNCT = "/.,"

# Confusable classes over case-folded characters:
# (digit representative, letter representative, letter-like members, digit-like members)
CONFUSABLES = (
    ("0", "o", "o", "0"),
    ("1", "l", "il|", "1|"),
)

_TRANSLATE = {ord(c): "-" for c in DASHES}
_TRANSLATE.update({ord(c): "'" for c in QUOTES})

LINE_CLASSES = {"ocr_line", "ocr_caption", "ocr_header", "ocr_textfloat"}
_BBOX_RE = re.compile(r"bbox\s+(-?\d+)\s+(-?\d+)\s+(-?\d+)\s+(-?\d+)")
_WCONF_RE = re.compile(r"x_wconf\s+(-?[\d.]+)")


@dataclass(frozen=True)
class TextPoint:
    """A word as a text feature point: normalized kernel plus bounding box."""

    kernel: str
    raw: str
    box: Box
    confidence: float = 0.0

    @classmethod
    def from_raw(cls, raw: str, box: Box, confidence: float = 0.0) -> "TextPoint":
        return cls(normalize_kernel(raw), raw, box, confidence)


@dataclass
class TextLine:
    line_box: Box
    words: list[TextPoint] = field(default_factory=list)


@dataclass
class DocumentText:
    lines: list[TextLine]
    page_size: tuple[int, int]

    def word_count(self) -> int:
        return sum(len(line.words) for line in self.lines)


@dataclass(frozen=True)
class OcrEngineConfig:
    executable: str = "tesseract"
    language: str = "fra"
    extra_args: tuple[str, ...] = ()
    timeout: float = 120.0

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("OCR timeout must be positive")
        object.__setattr__(self, "extra_args", tuple(self.extra_args))


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_kernel(raw: str) -> str:
    """Reduce a recognized word to its comparison kernel.

    Folds case, unifies dash and quote variants, drops punctuation that is not
    a word-internal hyphen/apostrophe or a separator between digits, and maps
    O/0 and I/l/1 confusables toward the token's dominant character type.
    """
    out = raw
    # removing punctuation can leave combining marks that compose on a
    # second pass; iterate to a fixed point so the result is idempotent
    for _ in range(4):
        prev, out = out, _normalize_once(out)
        if out == prev:
            break
    return out


def _fold(s: str) -> str:
    s = unicodedata.normalize("NFKD", s).casefold().replace("ı", "i")
    return unicodedata.normalize("NFKC", unicodedata.normalize("NFKD", s).casefold())


def _normalize_once(raw: str) -> str:
    s = _fold(raw)
    s = "".join(ch for ch in s.translate(_TRANSLATE) if not ch.isspace())

    letters = sum(ch.isalpha() for ch in s)
    digits = sum(ch.isdigit() for ch in s)
    digit_major = digits > letters
    for digit_rep, letter_rep, letter_like, digit_like in CONFUSABLES:
        if digit_major:
            s = "".join(digit_rep if ch in letter_like else ch for ch in s)
        else:
            s = "".join(letter_rep if ch in digit_like else ch for ch in s)

    start, end = 0, len(s)
    while start < end and _is_punct(s[start]):
        start += 1
    while end > start and _is_punct(s[end - 1]):
        end -= 1
    out = []
    for i in range(start, end):
        ch = s[i]
        if not _is_punct(ch) or ch in "-'":
            out.append(ch)
        elif ch in DIGIT_CONTEXT_PUNCT and s[i - 1].isdigit() and s[i + 1].isdigit():
            out.append(ch)
    return "".join(out)


def _classes(el) -> set[str]:
    return set((el.get("class") or "").split())


def _bbox(el) -> Box | None:
    m = _BBOX_RE.search(el.get("title") or "")
    if not m:
        return None
    x0, y0, x1, y1 = (int(v) for v in m.groups())
    return Box(x0, y0, max(1, x1 - x0), max(1, y1 - y0))


def parse_hocr(hocr: str) -> DocumentText:
    """Parse hOCR markup into lines of text feature points, in document order."""
    try:
        root = ET.fromstring(hocr.encode("utf-8") if isinstance(hocr, str) else hocr)
    except ET.ParseError as exc:
        raise MalformedHocr(f"unparseable hOCR: {exc}") from exc

    page_size = None
    lines: list[TextLine] = []

    def add_word(el, bucket: list[TextPoint]):
        text = "".join(el.itertext()).strip()
        box = _bbox(el)
        if box is None:
            raise MissingBbox(f"word {text!r} has no bbox")
        if not text:
            return
        m = _WCONF_RE.search(el.get("title") or "")
        conf = min(1.0, max(0.0, float(m.group(1)) / 100.0)) if m else 0.0
        bucket.append(TextPoint.from_raw(text, box, conf))

    def visit(el, current: list[TextPoint] | None):
        nonlocal page_size
        cls = _classes(el)
        if "ocr_page" in cls and page_size is None:
            pb = _bbox(el)
            if pb is not None:
                page_size = (pb.x1, pb.y1)
        if "ocrx_word" in cls:
            if current is None:
                orphan: list[TextPoint] = []
                add_word(el, orphan)
                if orphan:
                    lines.append(TextLine(orphan[0].box, orphan))
            else:
                add_word(el, current)
            return
        if cls & LINE_CLASSES:
            words: list[TextPoint] = []
            for child in el:
                visit(child, words)
            if words:
                lb = _bbox(el) or union_all(w.box for w in words)
                lb = lb.union(union_all(w.box for w in words))
                lines.append(TextLine(lb, words))
            return
        for child in el:
            visit(child, current)

    visit(root, None)
    if page_size is None:
        if lines:
            extent = union_all(line.line_box for line in lines)
            page_size = (extent.x1, extent.y1)
        else:
            page_size = (0, 0)
    return DocumentText(lines, page_size)


def document_to_hocr(doc: DocumentText, title: str = "page") -> str:
    """Serialize a DocumentText as a minimal hOCR 1.x page."""
    w, h = doc.page_size
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<html xmlns="http://www.w3.org/1999/xhtml">',
        "<head>",
        f"<title>{escape(title)}</title>",
        '<meta name="ocr-system" content="docdiff-synth"/>',
        '<meta name="ocr-capabilities" content="ocr_page ocr_line ocrx_word"/>',
        "</head>",
        "<body>",
        f'<div class="ocr_page" id="page_1" title="bbox 0 0 {w} {h}">',
    ]
    for li, line in enumerate(doc.lines, 1):
        b = line.line_box
        out.append(f'<span class="ocr_line" id="line_{li}" title="bbox {b.x} {b.y} {b.x1} {b.y1}">')
        for wi, word in enumerate(line.words, 1):
            wb = word.box
            conf = int(round(word.confidence * 100))
            attr = quoteattr(f"bbox {wb.x} {wb.y} {wb.x1} {wb.y1}; x_wconf {conf}")
            out.append(f'<span class="ocrx_word" id="word_{li}_{wi}" title={attr}>{escape(word.raw)}</span>')
        out.append("</span>")
    out += ["</div>", "</body>", "</html>", ""]
    return "\n".join(out)


def run_ocr(image_path, cfg: OcrEngineConfig) -> str:
    """Run the external engine as ``<exe> <image> <outbase> -l <lang> [args] hocr``."""
    exe = shutil.which(cfg.executable)
    if exe is None:
        raise EngineNotFound(f"OCR executable not found: {cfg.executable}")
    with tempfile.TemporaryDirectory(prefix="docdiff-ocr-") as tmp:
        outbase = Path(tmp) / "out"
        cmd = [exe, str(image_path), str(outbase), "-l", cfg.language, *cfg.extra_args, "hocr"]
        log.debug("running %s", cmd)
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=cfg.timeout)
        except subprocess.TimeoutExpired as exc:
            raise OcrTimeout(f"OCR engine exceeded {cfg.timeout}s on {image_path}") from exc
        except OSError as exc:
            raise EngineNotFound(f"cannot launch {exe}: {exc}") from exc
        if proc.returncode != 0:
            raise EngineFailed(f"OCR engine exited with status {proc.returncode}: {proc.stderr.strip()}",
                               proc.returncode, proc.stderr)
        for suffix in (".hocr", ".html"):
            out = outbase.with_suffix(suffix)
            if out.exists():
                return out.read_text(encoding="utf-8")
    raise EngineFailed("OCR engine produced no hOCR output", 0, proc.stderr)


def load_document_text(image_path, cfg: OcrEngineConfig, hocr_override=None) -> DocumentText:
    """Parse a ready hOCR file when given, otherwise OCR the image."""
    if hocr_override is not None:
        return parse_hocr(Path(hocr_override).read_text(encoding="utf-8"))
    return parse_hocr(run_ocr(image_path, cfg))
