"""Word-level comparison of scanned document images.

Words are treated as text feature points (normalized kernel plus bounding
box), coordinated across the two pages by edit distance, and words the OCR
disagrees on are re-checked by an adaptive pixel comparison.
"""

from .diff import (
    ComparisonReport,
    CoordinatedPair,
    DiffConfig,
    Modification,
    ModificationKind,
    compare_documents,
    compare_images,
    render_annotation,
    report_from_json,
    report_to_json,
)
from .errors import DocDiffError, StageError
from .evaluation import EvalResult, GroundTruth, match_report, run_experiment
from .ocr import OcrEngineConfig, TextPoint
from .pixmatch import PixParams, SearchRange
from .synth import EditSpec, SynthSpec, generate_pair
from .textmatch import MatchParams

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport", "CoordinatedPair", "DiffConfig", "DocDiffError", "EditSpec", "EvalResult",
    "GroundTruth", "MatchParams", "Modification", "ModificationKind", "OcrEngineConfig", "PixParams",
    "SearchRange", "StageError", "SynthSpec", "TextPoint", "compare_documents", "compare_images",
    "generate_pair", "match_report", "render_annotation", "report_from_json", "report_to_json",
    "run_experiment",
]
