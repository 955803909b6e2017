"""Command-line interface: ``docdiff compare | evaluate | synth``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from PIL import Image

from .diff import DiffConfig, compare_documents, render_annotation, report_to_json
from .errors import DocDiffError
from .evaluation import run_experiment
from .pixmatch import SearchRange
from .synth import SynthSpec, corpus_specs, generate_pair, write_pair

log = logging.getLogger("docdiff")

EXIT_CLEAN, EXIT_MODIFIED, EXIT_ERROR = 0, 1, 2
DEFAULT_IOU = 0.5


class UsageError(Exception):
    pass


def write_atomic(path, data: bytes | str) -> None:
    """Write via a temp file in the target directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- configuration -------------------------------------------------------------

def load_config(path) -> tuple[dict, float | None]:
    """Read a JSON config mirroring DiffConfig; an optional top-level "iou" is split off."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a JSON object")
    iou = data.pop("iou", None)
    return data, iou


def _alpha_range(text: str) -> tuple[float, float]:
    amp, _, step = text.partition(":")
    try:
        return float(amp), float(step) if step else 1.0
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ANGLE[:STEP], got {text!r}") from None


def build_config(args) -> tuple[DiffConfig, float]:
    """Defaults, then the config file, then command-line flags."""
    base: dict = {}
    iou = DEFAULT_IOU
    if getattr(args, "config", None):
        base, file_iou = load_config(args.config)
        if file_iou is not None:
            iou = file_iou
    try:
        cfg = DiffConfig.from_dict(base)
        if args.mode is not None:
            cfg = replace(cfg, mode=args.mode.replace("-", "_"))
        match = cfg.match
        if args.word_ocr_simil is not None:
            match = replace(match, word_ocr_simil=args.word_ocr_simil)
        if args.line_simil is not None:
            match = replace(match, line_simil=args.line_simil)
        pix = cfg.pix
        if args.word_pixel_coeff is not None:
            pix = replace(pix, word_pixel_coeff=args.word_pixel_coeff)
        rng = pix.range
        if args.shift_range is not None:
            s = args.shift_range
            rng = replace(rng, x_min=-s, x_max=s, y_min=-s, y_max=s)
        if args.alpha_range is not None:
            a, step = args.alpha_range
            rng = replace(rng, alpha_min=-a, alpha_max=a, alpha_step=step)
        cfg = replace(cfg, match=match, pix=replace(pix, range=rng))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc
    if getattr(args, "iou", None) is not None:
        iou = args.iou
    if not 0 < iou <= 1:
        raise UsageError(f"iou must lie in (0, 1], got {iou}")
    return cfg, iou


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("comparison parameters")
    g.add_argument("--config", help="JSON file with DiffConfig fields")
    g.add_argument("--mode", choices=["combined", "ocr-only", "ocr_only"])
    g.add_argument("--word-ocr-simil", type=float)
    g.add_argument("--line-simil", type=float)
    g.add_argument("--word-pixel-coeff", type=float)
    g.add_argument("--shift-range", type=int, metavar="PX", help="symmetric shift search in pixels")
    g.add_argument("--alpha-range", type=_alpha_range, metavar="DEG[:STEP]",
                   help="symmetric rotation search in degrees")


# --- commands ------------------------------------------------------------------

def cmd_compare(args) -> int:
    cfg, _ = build_config(args)
    report = compare_documents(args.ref, args.test, cfg, args.hocr_ref, args.hocr_test)
    text = report_to_json(report)
    if args.report:
        write_atomic(args.report, text)
    else:
        sys.stdout.write(text)
    if args.annotate:
        canvas = render_annotation(report.ref_image, report.test_image, report)
        buf = io.BytesIO()
        Image.fromarray(canvas, "RGB").save(buf, format="PNG")
        write_atomic(args.annotate, buf.getvalue())
    n = len(report.modifications)
    log.info("%d modification(s), %d coordinated word(s)", n, report.coordinated_count)
    return EXIT_MODIFIED if n else EXIT_CLEAN


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def cmd_evaluate(args) -> int:
    cfg, iou = build_config(args)
    res = run_experiment(args.corpus, cfg, iou, jobs=args.jobs)
    out = Path(args.out)

    pair_rows = [["pair", "category", "tp", "fp", "fn", "precision", "recall", "error"]]
    for p in res.pairs:
        if p.result is None:
            pair_rows.append([p.name, p.category, "", "", "", "", "", p.error])
        else:
            r = p.result
            pair_rows.append([p.name, p.category, r.tp, r.fp, r.fn, _fmt(r.precision), _fmt(r.recall), ""])
    t = res.total
    pair_rows.append(["aggregate", "micro", t.tp, t.fp, t.fn, _fmt(t.precision), _fmt(t.recall),
                      f"{len(res.errored)} errored" if res.errored else ""])

    table = [["category", "pairs", "tp", "fp", "fn", "precision", "recall"]]
    for row in res.table:
        table.append([row.category, row.pairs, row.tp, row.fp, row.fn, _fmt(row.precision), _fmt(row.recall)])
    table.append(["Mean", sum(r.pairs for r in res.table), t.tp, t.fp, t.fn, _fmt(t.precision), _fmt(t.recall)])

    aggregate = {
        "averaging": "micro",
        "iou": iou,
        "mode": cfg.mode,
        "pairs": len(res.pairs),
        "errored": [{"pair": p.name, "error": p.error} for p in res.errored],
        "tp": t.tp, "fp": t.fp, "fn": t.fn,
        "precision": t.precision, "recall": t.recall,
        "params": cfg.to_dict(),
    }
    write_atomic(out / "pairs.csv", _csv(pair_rows))
    write_atomic(out / "table.csv", _csv(table))
    write_atomic(out / "aggregate.json", json.dumps(aggregate, sort_keys=True, indent=2) + "\n")
    print(f"precision {t.precision:.4f} recall {t.recall:.4f} (tp={t.tp} fp={t.fp} fn={t.fn}, "
          f"{len(res.pairs)} pairs, {len(res.errored)} errored)")
    return EXIT_CLEAN


def load_synth_plan(path) -> list[tuple[SynthSpec, int]]:
    """A synth file is one group object or a list of them: SynthSpec fields plus "pairs"."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read synth spec {path}: {exc}") from exc
    groups = data if isinstance(data, list) else [data]
    plan = []
    for g in groups:
        if not isinstance(g, dict):
            raise UsageError("each synth group must be a JSON object")
        g = dict(g)
        pairs = g.pop("pairs", 1)
        if not isinstance(pairs, int) or pairs < 1:
            raise UsageError(f"'pairs' must be a positive integer, got {pairs!r}")
        try:
            plan.append((SynthSpec.from_dict(g), pairs))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid synth spec: {exc}") from exc
    return plan


def cmd_synth(args) -> int:
    plan = load_synth_plan(args.spec)
    k = 0
    for base, pairs in plan:
        for spec in corpus_specs(base, pairs):
            write_pair(generate_pair(spec), args.out, f"pair_{k:04d}")
            k += 1
    print(f"wrote {k} pair(s) to {args.out}")
    return EXIT_CLEAN


# --- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="docdiff", description="Word-level comparison of document images.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="compare a reference page with a test page")
    p.add_argument("ref")
    p.add_argument("test")
    p.add_argument("--hocr-ref", help="use this hOCR for the reference instead of running OCR")
    p.add_argument("--hocr-test", help="use this hOCR for the test page instead of running OCR")
    p.add_argument("--report", help="write the JSON report here (default: stdout)")
    p.add_argument("--annotate", help="write a side-by-side annotated PNG here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("evaluate", help="score a corpus directory against its truth files")
    p.add_argument("corpus")
    p.add_argument("--out", default=".", help="directory for pairs.csv, table.csv, aggregate.json")
    p.add_argument("--iou", type=float)
    p.add_argument("--jobs", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("spec", help="JSON synth spec")
    p.add_argument("out", help="output corpus directory")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"docdiff: {exc}", file=sys.stderr)
    except (DocDiffError, OSError, ValueError) as exc:
        print(f"docdiff: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
