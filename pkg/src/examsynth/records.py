"""Normalized record model shared by every pipeline stage.

A :class:`UnifiedRecord` is one multiple-choice question: question text, an
ordered list of answer options, the 0-based index of the correct option, an
optional figure reference, plus language/subject/source metadata. Records
are immutable value objects; all pipeline stages treat them as read-only.

Canonical on-disk form is JSON Lines, one record per line, with figure
references stored as paths relative to the directory of the JSONL file.
"""

from __future__ import annotations

import enum
import json
import unicodedata
from dataclasses import dataclass, replace
from pathlib import Path, PurePosixPath
from typing import Iterable, Iterator

MIN_OPTIONS = 2
MAX_OPTIONS = 6

# Sources with first-class adapters; any other non-empty string is accepted.
KNOWN_SOURCES = ("M3Exam", "CMMU", "M4U", "Pinocchio", "MMMU-Pro", "ExamsV")

# Languages the synthesis stages accept. Scoring accepts any two-letter code.
SYNTHESIS_LANGUAGES = ("zh", "en", "it", "de")


class Script(enum.Enum):
    """Writing-system class that drives font choice and line breaking."""

    HANZI = "Hanzi"
    LATIN = "Latin"


# Code point ranges counted as Hanzi: CJK Unified Ideographs and their
# extension/compatibility blocks.
_CJK_RANGES = (
    (0x3400, 0x4DBF),    # Extension A
    (0x4E00, 0x9FFF),    # base block
    (0xF900, 0xFAFF),    # compatibility ideographs
    (0x20000, 0x2EBEF),  # Extensions B..F
    (0x30000, 0x3134F),  # Extension G
)


def _is_cjk(codepoint: int) -> bool:
    return any(lo <= codepoint <= hi for lo, hi in _CJK_RANGES)


def classify_script(text: str) -> Script:
    """Classify ``text`` as Hanzi or Latin by letter majority.

    Counts letter-class code points (Unicode category ``L*``). Returns
    ``Script.HANZI`` when more than half of them fall in CJK ideograph
    ranges, ``Script.LATIN`` otherwise (ties included). Digits, punctuation
    and whitespace never affect the outcome.

    Raises:
        ValueError: if ``text`` contains no letter-class code points.
    """
    letters = 0
    cjk = 0
    for ch in text:
        if unicodedata.category(ch).startswith("L"):
            letters += 1
            if _is_cjk(ord(ch)):
                cjk += 1
    if letters == 0:
        raise ValueError("text contains no letter-class code points")
    return Script.HANZI if cjk * 2 > letters else Script.LATIN


def default_script(language: str, text: str = "") -> Script:
    """Script implied by ``language``, falling back to text classification.

    The four synthesis languages fully determine the script (zh is Hanzi,
    en/it/de are Latin). For any other language the text is classified,
    with Latin as the last resort for letterless text.
    """
    if language == "zh":
        return Script.HANZI
    if language in SYNTHESIS_LANGUAGES:
        return Script.LATIN
    try:
        return classify_script(text)
    except ValueError:
        return Script.LATIN


@dataclass(frozen=True)
class FigureRef:
    """Reference to a question figure: a file path or inline image bytes.

    ``width``/``height`` are pixel dimensions, filled in by
    :func:`examsynth.render.probe_figure` before layout when unknown.
    """

    path: str | None = None
    data: bytes | None = None
    width: int | None = None
    height: int | None = None

    def __post_init__(self) -> None:
        if (self.path is None) == (self.data is None):
            raise ValueError("figure needs exactly one of path or data")

    @property
    def has_dimensions(self) -> bool:
        return self.width is not None and self.height is not None


@dataclass(frozen=True)
class UnifiedRecord:
    """One normalized multiple-choice question."""

    id: str
    source_dataset: str
    language: str
    subject: str
    question_text: str
    options: tuple[str, ...]
    answer_index: int
    figure: FigureRef | None = None
    script: Script | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))
        if self.script is None:
            object.__setattr__(
                self, "script", default_script(self.language, self.question_text)
            )

    @property
    def option_count(self) -> int:
        return len(self.options)


def validate_record(record: UnifiedRecord) -> list[str]:
    """Return every violated record invariant; an empty list means valid.

    Violations are data, not faults: this never raises for a structurally
    well-formed record.
    """
    violations: list[str] = []
    if not record.id or not record.id.strip():
        violations.append("id is empty")
    if not record.source_dataset or not record.source_dataset.strip():
        violations.append("source_dataset is empty")
    if not (len(record.language) == 2 and record.language.isalpha() and record.language.islower()):
        violations.append(f"language is not a two-letter code: {record.language!r}")
    if not record.question_text.strip():
        violations.append("question_text is empty")
    n = len(record.options)
    if not MIN_OPTIONS <= n <= MAX_OPTIONS:
        violations.append(f"option count {n} outside {MIN_OPTIONS}..{MAX_OPTIONS}")
    for i, option in enumerate(record.options):
        if not option.strip():
            violations.append(f"option {i} is empty")
    if not 0 <= record.answer_index < n:
        violations.append("answer_index out of range")
    if record.language == "zh" and record.script is not Script.HANZI:
        violations.append("script/language mismatch: zh requires Hanzi")
    if record.language in ("en", "it", "de") and record.script is not Script.LATIN:
        violations.append(f"script/language mismatch: {record.language} requires Latin")
    if record.figure is not None:
        if record.figure.width is not None and record.figure.width <= 0:
            violations.append("figure width must be positive")
        if record.figure.height is not None and record.figure.height <= 0:
            violations.append("figure height must be positive")
    return violations


# --- canonical JSON Lines serialization ------------------------------------

def record_to_json_dict(record: UnifiedRecord, base_dir: Path | None = None) -> dict:
    """Build the canonical JSON object for ``record``.

    Figure paths are rewritten relative to ``base_dir`` (the directory the
    JSONL file lives in) using POSIX separators. Inline figure bytes have no
    canonical form and are rejected.
    """
    out: dict = {
        "id": record.id,
        "source_dataset": record.source_dataset,
        "language": record.language,
        "subject": record.subject,
        "question_text": record.question_text,
        "options": list(record.options),
        "answer_index": record.answer_index,
        "script": record.script.value,
        "figure": None,
    }
    if record.figure is not None:
        if record.figure.path is None:
            raise ValueError(f"record {record.id}: inline figure bytes are not serializable")
        path = record.figure.path
        if base_dir is not None:
            import os

            path = PurePosixPath(os.path.relpath(path, base_dir)).as_posix()
        out["figure"] = {
            "path": path,
            "width": record.figure.width,
            "height": record.figure.height,
        }
    return out


def record_from_json_dict(obj: dict, base_dir: Path | None = None) -> UnifiedRecord:
    """Inverse of :func:`record_to_json_dict`; resolves figure paths against ``base_dir``."""
    figure = None
    fig = obj.get("figure")
    if fig:
        path = fig["path"]
        if base_dir is not None:
            import os

            path = os.path.normpath(os.path.join(base_dir, path))
        figure = FigureRef(path=path, width=fig.get("width"), height=fig.get("height"))
    script = Script(obj["script"]) if obj.get("script") else None
    return UnifiedRecord(
        id=obj["id"],
        source_dataset=obj["source_dataset"],
        language=obj["language"],
        subject=obj["subject"],
        question_text=obj["question_text"],
        options=tuple(obj["options"]),
        answer_index=obj["answer_index"],
        figure=figure,
        script=script,
    )


def write_records_jsonl(records: Iterable[UnifiedRecord], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            obj = record_to_json_dict(record, base_dir=path.parent)
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def read_records_jsonl(path: str | Path) -> list[UnifiedRecord]:
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_json_dict(json.loads(line), base_dir=path.parent))
    return records


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (1-based line number, parsed object) for every non-blank line."""
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if line:
                yield lineno, json.loads(line)


def with_figure_dimensions(record: UnifiedRecord, width: int, height: int) -> UnifiedRecord:
    if record.figure is None:
        raise ValueError("record has no figure")
    return replace(record, figure=replace(record.figure, width=width, height=height))
