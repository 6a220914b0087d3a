"""Answer extraction, scoring, and accuracy aggregation.

Accuracies are exact fractions end to end; rounding to one decimal (half
up) happens only when a report is emitted. This matters on exact rounding
boundaries: an accuracy of 9/400 is 2.25% and must print 2.3, but Python's
float round() gives 2.2 (round-half-even), and float sums land on either
side of a boundary depending on error direction. Exact arithmetic plus one
pinned rounding rule makes reports reproducible digit for digit.

The "relative average" is the unweighted mean over exactly the four
augmented languages (zh, en, it, de); the overall average is the unweighted
mean over every language present. Unparseable model output scores as
incorrect and is never dropped, so denominators always equal group sizes.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping

from examsynth.manifest import DatasetManifestRow
from examsynth.records import iter_jsonl
from examsynth.style import LabelFormat

CORE_LANGUAGES = ("zh", "en", "it", "de")


class Modality(enum.Enum):
    TEXT_ONLY = "text_only"
    TEXT_WITH_VISUAL = "text_with_visual"


@dataclass(frozen=True)
class EvalRow:
    record_id: str
    language: str
    modality: Modality
    gold_index: int
    predicted_index: int | None
    raw_model_output: str

    @property
    def correct(self) -> bool:
        return self.predicted_index == self.gold_index


# Standalone uppercase letter, not embedded in a word ("B", "(C)", "A.").
_LETTER_TOKEN = re.compile(r"(?<![A-Za-z])([A-F])(?![A-Za-z])")
# Standalone digit 1-6: not part of a longer number ("12"), not a decimal
# ("3.5" or "2.3"), with or without parentheses/period around it.
_NUMBER_TOKEN = re.compile(r"(?<![\d.])([1-6])(?!\d)(?!\.\d)")


def extract_choice(
    model_output: str, option_count: int, label_format: LabelFormat | str
) -> int | None:
    """First in-range label token in ``model_output``, as a 0-based index.

    Out-of-range tokens are skipped, scanning continues; no usable token
    means None (scored as incorrect by the caller, never dropped).
    """
    if isinstance(label_format, str):
        label_format = LabelFormat(label_format)
    if label_format is LabelFormat.LETTERS:
        for match in _LETTER_TOKEN.finditer(model_output):
            index = ord(match.group(1)) - ord("A")
            if index < option_count:
                return index
        return None
    for match in _NUMBER_TOKEN.finditer(model_output):
        index = int(match.group(1)) - 1
        if index < option_count:
            return index
    return None


def accuracy(rows: Iterable[EvalRow]) -> Fraction:
    """Percent correct as an exact fraction; 0 for an empty group."""
    total = 0
    correct = 0
    for row in rows:
        total += 1
        correct += row.correct
    if total == 0:
        return Fraction(0)
    return Fraction(100 * correct, total)


def accuracy_by(
    rows: Iterable[EvalRow], key: Callable[[EvalRow], str]
) -> tuple[dict[str, Fraction], dict[str, int]]:
    """Micro accuracy and group size per key value."""
    totals: dict[str, int] = {}
    corrects: dict[str, int] = {}
    for row in rows:
        k = key(row)
        totals[k] = totals.get(k, 0) + 1
        corrects[k] = corrects.get(k, 0) + row.correct
    accuracies = {k: Fraction(100 * corrects[k], totals[k]) for k in totals}
    return accuracies, totals


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # Treat floats by their printed decimal value, not their binary one.
        return Fraction(str(value))
    return Fraction(value)


def aggregate(per_language: Mapping[str, object]) -> tuple[Fraction, Fraction]:
    """(rel_avg, overall_avg): unweighted means of per-language accuracies.

    rel_avg averages exactly zh/en/it/de and requires all four; overall_avg
    averages every language present.

    Raises:
        ValueError: a core language is missing, or the map is empty.
    """
    if not per_language:
        raise ValueError("per_language map is empty")
    values = {lang: _to_fraction(v) for lang, v in per_language.items()}
    missing = [lang for lang in CORE_LANGUAGES if lang not in values]
    if missing:
        raise ValueError(f"rel_avg needs all of zh/en/it/de; missing: {missing}")
    rel_avg = sum(values[lang] for lang in CORE_LANGUAGES) / 4
    overall_avg = sum(values.values(), Fraction(0)) / len(values)
    return rel_avg, overall_avg


def modality_report(
    rows: Iterable[EvalRow], languages: tuple[str, ...] = CORE_LANGUAGES
) -> tuple[dict[str, Fraction], dict[str, int]]:
    """Accuracy per modality, restricted to a language subset."""
    subset = [row for row in rows if row.language in languages]
    return accuracy_by(subset, key=lambda row: row.modality.value)


def round1(value: Fraction) -> Decimal:
    """Exact half-up rounding to one decimal place."""
    scaled = value * 10
    whole = scaled.numerator // scaled.denominator
    if scaled - whole >= Fraction(1, 2):
        whole += 1
    return (Decimal(whole) / Decimal(10)).quantize(Decimal("0.1"))


@dataclass(frozen=True)
class AggregateReport:
    per_language: dict[str, Fraction]
    language_counts: dict[str, int]
    rel_avg: Fraction | None
    overall_avg: Fraction | None
    per_modality: dict[str, Fraction]
    modality_counts: dict[str, int]

    def language_order(self) -> list[str]:
        core = [lang for lang in CORE_LANGUAGES if lang in self.per_language]
        rest = sorted(lang for lang in self.per_language if lang not in CORE_LANGUAGES)
        return core + rest

    def to_json_dict(self) -> dict:
        return {
            "per_language": {
                lang: float(round1(self.per_language[lang])) for lang in self.language_order()
            },
            "language_counts": {
                lang: self.language_counts[lang] for lang in self.language_order()
            },
            "rel_avg": None if self.rel_avg is None else float(round1(self.rel_avg)),
            "overall_avg": None if self.overall_avg is None else float(round1(self.overall_avg)),
            "per_modality": {
                key: float(round1(value)) for key, value in sorted(self.per_modality.items())
            },
            "modality_counts": dict(sorted(self.modality_counts.items())),
        }

    def to_text_table(self) -> str:
        lines = [f"{'group':<22} {'count':>7} {'accuracy':>9}"]
        for lang in self.language_order():
            lines.append(
                f"{lang:<22} {self.language_counts[lang]:>7} {round1(self.per_language[lang]):>9}"
            )
        for key in sorted(self.per_modality):
            lines.append(
                f"{key:<22} {self.modality_counts[key]:>7} {round1(self.per_modality[key]):>9}"
            )
        if self.rel_avg is not None:
            lines.append(f"{'rel_avg (zh/en/it/de)':<22} {'':>7} {round1(self.rel_avg):>9}")
        if self.overall_avg is not None:
            lines.append(f"{'overall_avg':<22} {'':>7} {round1(self.overall_avg):>9}")
        return "\n".join(lines)


def build_report(rows: list[EvalRow]) -> AggregateReport:
    """Full aggregation over scored rows.

    rel_avg is omitted (None) when a core language has no rows, since its
    definition requires all four; overall_avg requires at least one row.
    """
    per_language, language_counts = accuracy_by(rows, key=lambda row: row.language)
    per_modality, modality_counts = modality_report(rows)
    rel_avg: Fraction | None
    overall_avg: Fraction | None
    try:
        rel_avg, overall_avg = aggregate(per_language)
    except ValueError:
        rel_avg = None
        overall_avg = (
            sum(per_language.values(), Fraction(0)) / len(per_language) if per_language else None
        )
    return AggregateReport(
        per_language=per_language,
        language_counts=language_counts,
        rel_avg=rel_avg,
        overall_avg=overall_avg,
        per_modality=per_modality,
        modality_counts=modality_counts,
    )


def read_predictions(path: str | Path) -> dict[str, str]:
    """JSON Lines of {record_id, model_output}; later duplicates win."""
    predictions: dict[str, str] = {}
    for _lineno, obj in iter_jsonl(path):
        predictions[str(obj["record_id"])] = str(obj.get("model_output", ""))
    return predictions


def rows_from_manifest(
    manifest_rows: list[DatasetManifestRow], predictions: Mapping[str, str]
) -> tuple[list[EvalRow], list[str]]:
    """Join predictions onto manifest rows by record id.

    Records without a prediction score as incorrect; their ids come back as
    the second element so callers can warn with a count.
    """
    rows: list[EvalRow] = []
    missing: list[str] = []
    for mrow in manifest_rows:
        raw = predictions.get(mrow.record_id)
        if raw is None:
            missing.append(mrow.record_id)
            raw = ""
        predicted = extract_choice(raw, mrow.option_count, mrow.label_format)
        rows.append(
            EvalRow(
                record_id=mrow.record_id,
                language=mrow.language,
                modality=(
                    Modality.TEXT_WITH_VISUAL if mrow.has_figure else Modality.TEXT_ONLY
                ),
                gold_index=mrow.answer_index,
                predicted_index=predicted,
                raw_model_output=raw,
            )
        )
    return rows, missing


def write_report_json(report: AggregateReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
