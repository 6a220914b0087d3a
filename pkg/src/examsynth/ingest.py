"""Source-dataset loading: schema adapters, science filter, coverage stats.

Each upstream dataset ships its own manifest schema (JSON array, JSON
Lines, or CSV). An AdapterConfig maps source field names onto the unified
record fields and says how answer keys are encoded; loading normalizes
every row or records a machine-readable skip reason, never dropping rows
silently.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from examsynth.records import (
    FigureRef,
    UnifiedRecord,
    iter_jsonl,
    validate_record,
)

# Science subjects kept by default; matching is exact after casefolding.
DEFAULT_SUBJECT_ALLOWLIST = frozenset(
    {"Chemistry", "Physics", "Biology", "Biochemistry", "Engineering"}
)

ANSWER_KEY_STYLES = ("letter", "number", "index0")

# Unified-side targets an adapter may map onto.
_MANDATORY_TARGETS = frozenset({"id", "question_text", "options", "answer"})
_ALL_TARGETS = _MANDATORY_TARGETS | {"language", "figure"}

_WS_RUN = re.compile(r"\s+")


class AdapterError(Exception):
    """Adapter config is unusable for the given manifest (fail-fast)."""


@dataclass(frozen=True)
class _BadRow:
    """Placeholder for a source row that could not even be parsed."""

    reason: str


@dataclass(frozen=True)
class AdapterConfig:
    source_dataset: str
    field_map: dict[str, str]  # source field name -> unified field name
    answer_key_style: str  # "letter" | "number" | "index0"
    subject_field: str
    language_override: str | None = None

    def validate(self) -> list[str]:
        violations: list[str] = []
        if self.answer_key_style not in ANSWER_KEY_STYLES:
            violations.append(
                f"answer_key_style must be one of {ANSWER_KEY_STYLES}, "
                f"got {self.answer_key_style!r}"
            )
        targets = set(self.field_map.values())
        unknown = targets - _ALL_TARGETS
        if unknown:
            violations.append(f"field_map maps onto unknown fields: {sorted(unknown)}")
        missing = _MANDATORY_TARGETS - targets
        if missing:
            violations.append(f"field_map misses mandatory fields: {sorted(missing)}")
        if "language" not in targets and not self.language_override:
            violations.append("no language source: map a language field or set language_override")
        if not self.subject_field:
            violations.append("subject_field is empty")
        return violations

    def source_field_for(self, target: str) -> str | None:
        for source, unified in self.field_map.items():
            if unified == target:
                return source
        return None


def normalize_text(text: str) -> str:
    """Collapse whitespace runs (incl. newlines) to single spaces and trim."""
    return _WS_RUN.sub(" ", text).strip()


def answer_key_to_index(key, style: str, option_count: int) -> int:
    """Convert a source answer key to a 0-based index.

    letter: "A".."F", tolerant of surrounding parentheses/period/space;
    number: 1-based "1".."6"; index0: already 0-based. Raises ValueError
    for keys outside the option range or in the wrong shape.
    """
    text = str(key).strip().strip("()").rstrip(".").strip()
    if style == "letter":
        if len(text) != 1 or not "A" <= text.upper() <= "F":
            raise ValueError(f"bad letter answer key: {key!r}")
        index = ord(text.upper()) - ord("A")
    elif style == "number":
        if not text.isdigit():
            raise ValueError(f"bad number answer key: {key!r}")
        index = int(text) - 1
    elif style == "index0":
        if isinstance(key, bool) or not text.lstrip("-").isdigit():
            raise ValueError(f"bad index answer key: {key!r}")
        index = int(text)
    else:
        raise ValueError(f"unknown answer_key_style: {style!r}")
    if not 0 <= index < option_count:
        raise ValueError(f"answer key {key!r} out of range for {option_count} options")
    return index


def _rows_from_file(path: Path):
    """Yield (row_number, dict | _BadRow) from JSON array/JSON Lines/CSV manifests."""
    suffix = path.suffix.lower()
    if suffix == ".csv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            yield from enumerate(reader, start=1)
    elif suffix == ".jsonl":
        with path.open("r", encoding="utf-8") as fh:
            for row_number, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield row_number, json.loads(line)
                except json.JSONDecodeError as exc:
                    yield row_number, _BadRow(f"invalid JSON: {exc.msg}")
    elif suffix == ".json":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise AdapterError(f"{path}: not valid JSON: {exc}") from exc
        if not isinstance(data, list):
            raise AdapterError(f"{path}: top-level JSON must be an array of rows")
        yield from enumerate(data, start=1)
    else:
        raise AdapterError(f"{path}: unsupported manifest format {suffix!r}")


def _row_to_record(
    row: dict, config: AdapterConfig, base_dir: Path
) -> UnifiedRecord:
    extracted: dict = {}
    for source_field, target in config.field_map.items():
        if source_field not in row or row[source_field] in (None, ""):
            # Optional sources: figure may be absent; language falls back to
            # the adapter's override for single-language datasets.
            if target in ("figure", "language"):
                continue
            raise ValueError(f"missing field: {source_field}")
        extracted[target] = row[source_field]

    subject = row.get(config.subject_field)
    if subject in (None, ""):
        raise ValueError(f"missing field: {config.subject_field}")

    options_raw = extracted["options"]
    if isinstance(options_raw, str):
        # CSV manifests carry options as one pipe-separated cell.
        options = tuple(part.strip() for part in options_raw.split("|"))
    elif isinstance(options_raw, (list, tuple)):
        options = tuple(str(part) for part in options_raw)
    else:
        raise ValueError(f"options field has unusable type {type(options_raw).__name__}")
    options = tuple(normalize_text(part) for part in options)

    answer_index = answer_key_to_index(
        extracted["answer"], config.answer_key_style, len(options)
    )

    language = extracted.get("language") or config.language_override
    if not language:
        raise ValueError("missing field: language")
    figure = None
    figure_value = extracted.get("figure")
    if figure_value:
        figure_path = Path(figure_value)
        if not figure_path.is_absolute():
            figure_path = base_dir / figure_path
        figure = FigureRef(path=str(figure_path))

    record = UnifiedRecord(
        id=normalize_text(str(extracted["id"])),
        source_dataset=config.source_dataset,
        language=str(language),
        subject=normalize_text(str(subject)),
        question_text=normalize_text(str(extracted["question_text"])),
        options=options,
        answer_index=answer_index,
        figure=figure,
    )
    violations = validate_record(record)
    if violations:
        raise ValueError("; ".join(violations))
    return record


def load_manifest(
    path: str | Path, config: AdapterConfig
) -> tuple[list[UnifiedRecord], list[tuple[int, str]]]:
    """Load one source manifest; returns (records, skipped rows).

    Every returned record passes validate_record. Malformed rows become
    (row_number, reason) entries. Unreadable files and adapter configs that
    reference fields absent from the manifest fail fast before any row is
    normalized.
    """
    path = Path(path)
    adapter_violations = config.validate()
    if adapter_violations:
        raise AdapterError(f"{path}: " + "; ".join(adapter_violations))
    rows = list(_rows_from_file(path))
    first = next((row for _n, row in rows if isinstance(row, dict)), None)
    if first is not None:
        required = set(config.field_map) | {config.subject_field}
        optional = {
            f
            for f, target in config.field_map.items()
            if target in ("figure", "language")
        }
        absent = {f for f in required - optional if f not in first}
        if absent:
            raise AdapterError(
                f"{path}: adapter references fields absent from the manifest: {sorted(absent)}"
            )
    records: list[UnifiedRecord] = []
    skips: list[tuple[int, str]] = []
    for row_number, row in rows:
        if isinstance(row, _BadRow):
            skips.append((row_number, row.reason))
            continue
        if not isinstance(row, dict):
            skips.append((row_number, "row is not an object"))
            continue
        try:
            records.append(_row_to_record(row, config, path.parent))
        except ValueError as exc:
            skips.append((row_number, str(exc)))
    return records, skips


def write_skip_report(skips: list[tuple[int, str]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row_number, reason in skips:
            fh.write(json.dumps({"row_number": row_number, "reason": reason}) + "\n")


def filter_science(
    records: list[UnifiedRecord], allowlist: frozenset[str] | set[str] = DEFAULT_SUBJECT_ALLOWLIST
) -> list[UnifiedRecord]:
    """Keep records whose subject matches the allowlist after casefolding."""
    folded = {subject.casefold() for subject in allowlist}
    return [record for record in records if record.subject.casefold() in folded]


def partition_by_language(records: list[UnifiedRecord]) -> dict[str, list[UnifiedRecord]]:
    buckets: dict[str, list[UnifiedRecord]] = {}
    for record in records:
        buckets.setdefault(record.language, []).append(record)
    return buckets


@dataclass(frozen=True)
class StatsReport:
    """Used-vs-available coverage, per source and per language."""

    used_by_source_language: dict[tuple[str, str], int]
    total_by_source: dict[str, int]
    grand_used: int = field(init=False)
    grand_total: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "grand_used", sum(self.used_by_source_language.values()))
        object.__setattr__(self, "grand_total", sum(self.total_by_source.values()))

    def used_by_source(self, source: str) -> int:
        return sum(
            count
            for (src, _lang), count in self.used_by_source_language.items()
            if src == source
        )

    def to_json_dict(self) -> dict:
        sources = {}
        for source in sorted(self.total_by_source):
            languages = {
                lang: count
                for (src, lang), count in sorted(self.used_by_source_language.items())
                if src == source
            }
            sources[source] = {
                "used": self.used_by_source(source),
                "total_available": self.total_by_source[source],
                "used_by_language": languages,
            }
        return {
            "sources": sources,
            "grand_used": self.grand_used,
            "grand_total": self.grand_total,
        }

    def to_text_table(self) -> str:
        lines = [f"{'source':<12} {'language':<8} {'used':>8} {'total':>9}"]
        for source in sorted(self.total_by_source):
            per_lang = {
                lang: count
                for (src, lang), count in sorted(self.used_by_source_language.items())
                if src == source
            }
            for lang, count in per_lang.items():
                lines.append(f"{source:<12} {lang:<8} {count:>8}")
            lines.append(
                f"{source:<12} {'all':<8} {self.used_by_source(source):>8} "
                f"{self.total_by_source[source]:>9}"
            )
        lines.append(f"{'TOTAL':<12} {'all':<8} {self.grand_used:>8} {self.grand_total:>9}")
        return "\n".join(lines)


def dataset_stats(
    records: list[UnifiedRecord], totals: dict[str, int]
) -> StatsReport:
    """Count used records per (source, language) against available totals.

    Raises:
        ValueError: a record's source has no entry in ``totals``.
    """
    used: dict[tuple[str, str], int] = {}
    for record in records:
        if record.source_dataset not in totals:
            raise ValueError(
                f"source {record.source_dataset!r} missing from total_available map"
            )
        key = (record.source_dataset, record.language)
        used[key] = used.get(key, 0) + 1
    return StatsReport(used_by_source_language=used, total_by_source=dict(totals))
