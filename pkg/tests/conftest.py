import os
import stat
import sys
import textwrap
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from docdiff.synth import EditSpec, SynthSpec  # noqa: E402

ALL_EDITS = ("substitute_chars", "replace_word", "insert_word", "delete_word", "insert_line", "delete_line")


def all_kinds_spec(seed: int = 0, **kw) -> SynthSpec:
    return SynthSpec(seed=seed, edits=[EditSpec(k) for k in ALL_EDITS], **kw)


@pytest.fixture
def fake_engine(tmp_path):
    """Factory for a stand-in OCR executable with scripted behaviour."""

    def make(behaviour: str = "ok", hocr: str = "", name: str = "fake-ocr") -> str:
        path = Path(tmp_path) / name
        hocr_file = Path(tmp_path) / f"{name}.hocr"
        hocr_file.write_text(hocr, encoding="utf-8")
        path.write_text(textwrap.dedent(f"""\
            #!{sys.executable}
            import shutil, sys, time
            behaviour = {behaviour!r}
            if behaviour == "fail":
                sys.stderr.write("engine exploded\\n")
                sys.exit(3)
            if behaviour == "sleep":
                time.sleep(10)
            if behaviour == "silent":
                sys.exit(0)
            with open(sys.argv[0] + ".args", "w") as fh:
                fh.write("\\n".join(sys.argv[1:]))
            shutil.copy({str(hocr_file)!r}, sys.argv[2] + ".hocr")
            """))
        path.chmod(path.stat().st_mode | stat.S_IXUSR)
        return str(path)

    return make
