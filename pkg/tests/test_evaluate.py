"""Tests for answer extraction, exact-fraction scoring, and aggregation.

The aggregation oracles are the published per-language accuracy rows this
harness must reproduce. One published row is internally inconsistent with
the unweighted-mean definition (see TestPublishedRows.test_llava_row_*);
the consistent behavior is asserted, the printed value is marked xfail.
"""

from __future__ import annotations

import json
import random
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from examsynth.evaluate import (
    CORE_LANGUAGES,
    AggregateReport,
    EvalRow,
    Modality,
    accuracy,
    accuracy_by,
    aggregate,
    build_report,
    extract_choice,
    modality_report,
    read_predictions,
    round1,
    rows_from_manifest,
    write_report_json,
)
from examsynth.manifest import DatasetManifestRow

ALL_LANGUAGES = ("zh", "en", "it", "de", "hr", "hu", "ar", "fr", "pl", "es", "bg", "sr", "sk")

# Published per-language accuracy rows (percent), in ALL_LANGUAGES order,
# with the rel/overall averages printed next to them.
PUBLISHED_ROWS = {
    "base": (
        (24.8, 21.3, 23.1, 29.0, 25.3, 27.1, 23.2, 34.8, 22.0, 31.0, 30.2, 22.5, 17.4),
        "24.6",
        "25.5",
    ),
    "ft_exam": (
        (32.5, 22.5, 32.4, 42.3, 32.3, 30.3, 25.0, 47.8, 30.0, 67.0, 32.5, 27.9, 37.0),
        "32.4",
        "35.3",
    ),
    "ft_exam_plus_synth": (
        (30.8, 23.6, 32.6, 46.2, 31.8, 31.0, 26.7, 44.2, 22.0, 59.0, 28.2, 25.7, 50.0),
        "33.3",
        "34.8",
    ),
    "internvl3_2b": (
        (27.8, 21.3, 33.8, 35.5, 27.4, 27.1, 14.3, 47.8, 24.0, 43.0, 21.3, 29.9, 19.6),
        "29.6",
        "28.7",
    ),
}

# This row's printed averages do not match the unweighted mean of its own
# per-language cells (unweighted: rel 20.8, overall 18.9).
LLAVA_ROW = (14.2, 18.7, 25.6, 24.7, 5.8, 18.9, 3.3, 23.2, 23.0, 29.0, 15.8, 26.3, 17.4)
LLAVA_PRINTED = ("20.3", "17.5")

# Single-language fine-tuning rows: four core languages plus printed mean.
MONOLINGUAL_ROWS = {
    "ft_zh": ((32.3, 23.3, 28.1, 31.5), "28.8"),
    "ft_en": ((29.3, 25.4, 25.3, 30.8), "27.7"),
    "ft_it": ((28.5, 18.7, 26.7, 34.1), "27.0"),
    "ft_de": ((26.5, 21.6, 28.8, 34.1), "27.8"),  # exact 27.75 boundary
}


def row(lang="en", modality=Modality.TEXT_ONLY, gold=0, predicted=0, rid="r", raw="A"):
    return EvalRow(
        record_id=rid,
        language=lang,
        modality=modality,
        gold_index=gold,
        predicted_index=predicted,
        raw_model_output=raw,
    )


class TestExtractChoiceLetters:
    @pytest.mark.parametrize(
        "text,want",
        [
            ("B", 1),
            ("(C)", 2),
            ("A.", 0),
            ("The answer is D", 3),
            ("Answer: B. Because...", 1),
            ("b", None),  # lowercase is prose, not a label
            ("F", 5),
            ("ANSWER", None),  # letters inside words never match
            ("CAB", None),
            ("I pick (A)", 0),
            ("", None),
            ("no option at all", None),
        ],
    )
    def test_cases(self, text, want):
        assert extract_choice(text, 6, "letters") == want

    def test_first_in_range_wins(self):
        assert extract_choice("D or maybe B", 6, "letters") == 3

    def test_out_of_range_skipped_scan_continues(self):
        # Only 3 options: "F" is skipped, "B" taken.
        assert extract_choice("F, no wait, B", 3, "letters") == 1

    def test_all_out_of_range_is_none(self):
        assert extract_choice("E or F", 4, "letters") is None


class TestExtractChoiceNumbers:
    @pytest.mark.parametrize(
        "text,want",
        [
            ("2", 1),
            ("(3)", 2),
            ("1.", 0),
            ("The answer is 4", 3),
            ("12", None),  # multi-digit numbers are not labels
            ("3.5", None),  # decimals are quantities, not labels
            ("2.3", None),
            ("0", None),  # out of the 1..6 label alphabet
            ("7", None),
            ("answer: (1)", 0),
            ("", None),
        ],
    )
    def test_cases(self, text, want):
        assert extract_choice(text, 6, "numbers") == want

    def test_first_in_range_wins(self):
        assert extract_choice("4, not 2", 6, "numbers") == 3

    def test_out_of_range_skipped(self):
        assert extract_choice("6 or rather 2", 3, "numbers") == 1

    def test_decimal_never_contributes_digits(self):
        # Neither the 3 nor the 5 of "3.5" may be read as a label.
        assert extract_choice("value 3.5 so answer 2", 6, "numbers") == 1

    def test_trailing_period_is_fine(self):
        assert extract_choice("2.", 6, "numbers") == 1

    def test_enum_and_string_format_agree(self):
        from examsynth.style import LabelFormat

        assert extract_choice("B", 4, LabelFormat.LETTERS) == extract_choice("B", 4, "letters")


class TestAccuracy:
    def test_two_of_three_correct(self):
        rows = [row(predicted=0), row(predicted=0), row(predicted=1)]
        acc = accuracy(rows)
        assert acc == Fraction(200, 3)
        assert round1(acc) == Decimal("66.7")

    def test_empty_group_zero(self):
        assert accuracy([]) == Fraction(0)

    def test_none_prediction_counts_in_denominator(self):
        rows = [row(predicted=0), row(predicted=None, raw="")]
        assert accuracy(rows) == Fraction(100 * 1, 2)

    def test_all_unparseable_is_zero(self):
        rows = [row(predicted=None, raw="??") for _ in range(5)]
        assert accuracy(rows) == Fraction(0)

    def test_matches_brute_force_recount(self):
        rnd = random.Random(404)
        rows = [
            row(
                lang=rnd.choice(ALL_LANGUAGES),
                gold=rnd.randrange(4),
                predicted=rnd.choice([None, 0, 1, 2, 3]),
                rid=f"t-{i}",
            )
            for i in range(500)
        ]
        per_lang, counts = accuracy_by(rows, key=lambda r: r.language)
        for lang in {r.language for r in rows}:
            group = [r for r in rows if r.language == lang]
            n_correct = sum(1 for r in group if r.predicted_index == r.gold_index)
            assert per_lang[lang] == Fraction(100 * n_correct, len(group))
            assert counts[lang] == len(group)


class TestRound1:
    @pytest.mark.parametrize(
        "value,want",
        [
            (Fraction(491, 20), "24.6"),  # 24.55: binary floats would print 24.5
            (Fraction(111, 4), "27.8"),  # 27.75 half-up boundary
            (Fraction(2259, 65), "34.8"),  # 34.7538...
            (Fraction(200, 3), "66.7"),
            (Fraction(0), "0.0"),
            (Fraction(100), "100.0"),
            (Fraction(2481, 100), "24.8"),
        ],
    )
    def test_half_up_boundaries(self, value, want):
        assert round1(value) == Decimal(want)

    def test_half_up_beats_float_half_even(self):
        # 9 correct of 400 is exactly 2.25%: float round() gives 2.2
        # (half-even), the report contract requires 2.3.
        assert round(2.25, 1) == 2.2
        assert round1(Fraction(9 * 100, 400)) == Decimal("2.3")

    def test_core_row_boundary_mean(self):
        # mean(24.8, 21.3, 23.1, 29.0) is exactly 24.55; half-up prints 24.6.
        rel, _ = aggregate({"zh": 24.8, "en": 21.3, "it": 23.1, "de": 29.0})
        assert rel == Fraction(2455, 100)
        assert round1(rel) == Decimal("24.6")


class TestAggregate:
    def test_constant_map(self):
        per = {lang: 25.0 for lang in ALL_LANGUAGES}
        rel, overall = aggregate(per)
        assert rel == overall == Fraction(25)

    def test_missing_core_language_rejected(self):
        per = {"zh": 10, "en": 10, "it": 10}
        with pytest.raises(ValueError, match="missing: \\['de'\\]"):
            aggregate(per)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            aggregate({})

    def test_extra_languages_only_affect_overall(self):
        base = {"zh": 20, "en": 30, "it": 40, "de": 50}
        rel_a, overall_a = aggregate(base)
        rel_b, overall_b = aggregate({**base, "fr": 100})
        assert rel_a == rel_b == Fraction(35)
        assert overall_a == Fraction(35)
        assert overall_b == Fraction(240, 5)

    @given(st.permutations(list(ALL_LANGUAGES)))
    def test_insertion_order_invariance(self, order):
        values = dict(zip(ALL_LANGUAGES, PUBLISHED_ROWS["base"][0]))
        shuffled = {lang: values[lang] for lang in order}
        assert aggregate(shuffled) == aggregate(values)

    def test_accepts_fractions_floats_ints(self):
        per = {"zh": Fraction(50), "en": 50.0, "it": 50, "de": Fraction(100, 2)}
        rel, overall = aggregate(per)
        assert rel == overall == Fraction(50)


class TestPublishedRows:
    @pytest.mark.parametrize("name", sorted(PUBLISHED_ROWS))
    def test_row_reproduced(self, name):
        cells, want_rel, want_overall = PUBLISHED_ROWS[name]
        per = dict(zip(ALL_LANGUAGES, cells))
        rel, overall = aggregate(per)
        assert abs(rel - Fraction(want_rel)) <= Fraction(1, 20)
        assert abs(overall - Fraction(want_overall)) <= Fraction(1, 20)
        assert round1(rel) == Decimal(want_rel)
        assert round1(overall) == Decimal(want_overall)

    @pytest.mark.parametrize("name", sorted(MONOLINGUAL_ROWS))
    def test_monolingual_row_reproduced(self, name):
        cells, want_avg = MONOLINGUAL_ROWS[name]
        per = dict(zip(CORE_LANGUAGES, cells))
        rel, overall = aggregate(per)
        assert rel == overall  # only the four core languages present
        assert round1(rel) == Decimal(want_avg)

    def test_llava_row_unweighted_means(self):
        # The arithmetically consistent averages for this row.
        per = dict(zip(ALL_LANGUAGES, LLAVA_ROW))
        rel, overall = aggregate(per)
        assert round1(rel) == Decimal("20.8")
        assert round1(overall) == Decimal("18.9")

    @pytest.mark.xfail(
        reason="published averages for this row are inconsistent with the "
        "unweighted mean of its own per-language cells",
        strict=True,
    )
    def test_llava_row_as_printed(self):
        per = dict(zip(ALL_LANGUAGES, LLAVA_ROW))
        rel, overall = aggregate(per)
        assert round1(rel) == Decimal(LLAVA_PRINTED[0])
        assert round1(overall) == Decimal(LLAVA_PRINTED[1])


class TestModalityReport:
    def test_split_matches_recount(self):
        rnd = random.Random(7)
        rows = []
        for i in range(200):
            modality = rnd.choice(list(Modality))
            rows.append(
                row(
                    lang=rnd.choice(CORE_LANGUAGES),
                    modality=modality,
                    gold=0,
                    predicted=rnd.choice([0, 1]),
                    rid=f"m-{i}",
                )
            )
        per, counts = modality_report(rows)
        for modality in Modality:
            group = [r for r in rows if r.modality is modality]
            n_correct = sum(1 for r in group if r.correct)
            assert per[modality.value] == Fraction(100 * n_correct, len(group))
            assert counts[modality.value] == len(group)

    def test_restricted_to_language_subset(self):
        rows = [
            row(lang="en", modality=Modality.TEXT_ONLY, predicted=0),
            row(lang="fr", modality=Modality.TEXT_ONLY, predicted=1),  # excluded
        ]
        per, counts = modality_report(rows)
        assert counts == {"text_only": 1}
        assert per["text_only"] == Fraction(100)

    def test_all_text_only(self):
        rows = [row(modality=Modality.TEXT_ONLY, predicted=0) for _ in range(3)]
        per, counts = modality_report(rows)
        assert "text_with_visual" not in per
        assert counts == {"text_only": 3}

    def test_empty(self):
        assert modality_report([]) == ({}, {})


class TestBuildReport:
    def _mixed_rows(self):
        rows = []
        for i, lang in enumerate(ALL_LANGUAGES):
            rows.append(row(lang=lang, predicted=0, rid=f"a-{i}"))
            rows.append(row(lang=lang, predicted=1, rid=f"b-{i}"))
        return rows

    def test_full_report(self):
        report = build_report(self._mixed_rows())
        assert report.rel_avg == Fraction(50)
        assert report.overall_avg == Fraction(50)
        assert report.language_counts["zh"] == 2
        assert set(report.per_language) == set(ALL_LANGUAGES)

    def test_language_order_core_first(self):
        report = build_report(self._mixed_rows())
        order = report.language_order()
        assert order[:4] == list(CORE_LANGUAGES)
        assert order[4:] == sorted(ALL_LANGUAGES[4:])

    def test_rel_avg_none_without_core_coverage(self):
        rows = [row(lang="en", predicted=0), row(lang="fr", predicted=0)]
        report = build_report(rows)
        assert report.rel_avg is None
        assert report.overall_avg == Fraction(100)

    def test_empty_rows(self):
        report = build_report([])
        assert report.per_language == {}
        assert report.rel_avg is None and report.overall_avg is None

    def test_json_dict_rounds_to_one_decimal(self):
        rows = [row(predicted=0), row(predicted=0), row(predicted=1)]
        report = build_report(rows)
        obj = report.to_json_dict()
        assert obj["per_language"]["en"] == 66.7
        assert obj["language_counts"]["en"] == 3
        assert obj["rel_avg"] is None

    def test_text_table_lists_languages_and_averages(self):
        report = build_report(self._mixed_rows())
        table = report.to_text_table()
        assert "rel_avg (zh/en/it/de)" in table
        assert "overall_avg" in table
        assert table.splitlines()[1].startswith("zh")

    def test_report_round_trips_through_json_file(self, tmp_path):
        report = build_report(self._mixed_rows())
        path = tmp_path / "report.json"
        write_report_json(report, path)
        obj = json.loads(path.read_text())
        assert obj == report.to_json_dict()


class TestPredictionsJoin:
    def _manifest_rows(self):
        def mrow(rid, lang="en", has_figure=False, label="letters", answer=1, n=4):
            return DatasetManifestRow(
                record_id=rid,
                image_path=f"images/{rid}.png",
                language=lang,
                subject="Physics",
                source_dataset="M3Exam",
                answer_index=answer,
                option_count=n,
                label_format=label,
                has_figure=has_figure,
                style_digest="0" * 64,
                width=896,
                height=400,
            )

        return [mrow("p-1"), mrow("p-2", has_figure=True, label="numbers"), mrow("p-3")]

    def test_join_scores_and_modalities(self):
        rows, missing = rows_from_manifest(
            self._manifest_rows(), {"p-1": "B", "p-2": "(2)", "p-3": "garbage"}
        )
        assert missing == []
        by_id = {r.record_id: r for r in rows}
        assert by_id["p-1"].correct
        assert by_id["p-1"].modality is Modality.TEXT_ONLY
        assert by_id["p-2"].correct
        assert by_id["p-2"].modality is Modality.TEXT_WITH_VISUAL
        assert by_id["p-3"].predicted_index is None
        assert not by_id["p-3"].correct

    def test_missing_predictions_scored_incorrect_and_reported(self):
        rows, missing = rows_from_manifest(self._manifest_rows(), {"p-1": "B"})
        assert missing == ["p-2", "p-3"]
        assert len(rows) == 3  # never dropped
        by_id = {r.record_id: r for r in rows}
        assert by_id["p-2"].raw_model_output == ""
        assert by_id["p-2"].predicted_index is None

    def test_read_predictions_later_duplicate_wins(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        path.write_text(
            json.dumps({"record_id": "x", "model_output": "A"})
            + "\n"
            + json.dumps({"record_id": "x", "model_output": "B"})
            + "\n"
        )
        assert read_predictions(path) == {"x": "B"}
