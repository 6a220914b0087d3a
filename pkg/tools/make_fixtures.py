#!/usr/bin/env python3
"""Generate the committed test fixtures deterministically.

Everything under tests/fixtures/ is produced by this script: source-dataset
manifests in their native shapes (including deliberately malformed rows),
figure images drawn with arithmetic-only geometry (no RNG), a canonical
100-record corpus for determinism tests, a single-record corpus shaped like
the classic circuit-question exam page, and the pipeline config used by CLI
tests.

`--goldens` re-renders the 10-record mini corpus with default settings and
freezes the output digests into tests/fixtures/goldens.json. Those digests
are a regression reference for this environment (font files + Pillow
build), not ground truth; regenerate after changing either.
"""

import argparse
import csv
import hashlib
import json
import sys
import tempfile
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"

ZH_QUESTIONS = [
    "电路中两个电阻串联后接入电源，求通过电路的总电流是多少",
    "一个物体从静止开始做匀加速直线运动，经过五秒后速度达到每秒十米，求它的加速度大小",
    "下列物质中属于纯净物的是哪一个",
    "某溶液的酸碱度为七，向其中加入少量盐酸后其数值将如何变化",
    "植物进行光合作用的主要场所是细胞中的哪个结构",
    "在标准大气压下，水的沸点是多少摄氏度",
    "如图所示的杠杆处于平衡状态，求动力臂与阻力臂的比值",
    "下列关于化学反应速率的说法中正确的是哪一项",
]

EN_QUESTIONS = [
    "The circuit diagram below represents four resistors connected to a 12-volt source. What is the total current in the circuit?",
    "A ball is thrown vertically upward with an initial speed of 20 m/s. How long does it take to reach the highest point of its path?",
    "Which of the following compounds contains an ionic bond?",
    "A solution has a pH of 3. What is the concentration of hydrogen ions in moles per liter?",
    "Which organelle is responsible for most of the energy production in animal cells?",
    "A beam is supported at both ends and loaded at its center. Where is the bending moment largest?",
    "What mass of oxygen is required to completely burn 16 grams of methane?",
    "Which quantity stays constant for a satellite moving in a circular orbit around the Earth?",
]

IT_QUESTIONS = [
    "Quale dei seguenti elementi è un metallo alcalino?",
    "Un corpo si muove con velocità costante lungo una retta. Quale forza risultante agisce su di esso?",
    "Qual è la formula chimica dell'acqua ossigenata?",
    "Quale organo del corpo umano produce l'insulina?",
    "Un circuito contiene due resistenze collegate in parallelo. Come si calcola la resistenza equivalente?",
    "Quale processo trasforma l'energia luminosa in energia chimica nelle piante?",
    "Qual è l'unità di misura della carica elettrica nel sistema internazionale?",
    "Quale legge collega la pressione e il volume di un gas a temperatura costante?",
]

DE_QUESTIONS = [
    "Welche der folgenden Verbindungen ist ein Salz?",
    "Ein Körper fällt aus einer Höhe von zwanzig Metern. Wie lange dauert der Fall ohne Luftwiderstand?",
    "Welches Organ filtert das Blut im menschlichen Körper?",
    "Zwei Widerstände sind in Reihe geschaltet. Wie groß ist der Gesamtwiderstand?",
    "Welche Aussage über die Dichte von Wasser bei vier Grad Celsius ist richtig?",
    "Bei welcher Reaktion wird Energie in Form von Wärme freigesetzt?",
    "Welche Kraft hält die Planeten auf ihren Bahnen um die Sonne?",
    "Wie viele Elektronen besitzt ein neutrales Kohlenstoffatom?",
]

QUESTIONS = {"zh": ZH_QUESTIONS, "en": EN_QUESTIONS, "it": IT_QUESTIONS, "de": DE_QUESTIONS}

OPTION_BANKS = {
    "zh": ["零点五安", "一点二安", "二点零安", "三点六安", "四点八安", "六点四安"],
    "en": ["0.50 A", "2.0 A", "8.6 A", "24 A", "36 A", "48 A"],
    "it": ["0,50 A", "2,0 A", "8,6 A", "24 A", "36 A", "48 A"],
    "de": ["0,50 A", "2,0 A", "8,6 A", "24 A", "36 A", "48 A"],
}

SUBJECTS = ["Physics", "Chemistry", "Biology", "Biochemistry", "Engineering"]
PALETTE = [(70, 90, 160), (170, 80, 70), (80, 150, 90), (140, 110, 60), (90, 90, 90)]


def draw_figure(path: Path, index: int, width: int, height: int) -> None:
    """Deterministic schematic drawing; geometry is pure arithmetic on index."""
    img = Image.new("RGB", (width, height), (250, 250, 248))
    d = ImageDraw.Draw(img)
    d.rectangle([2, 2, width - 3, height - 3], outline=(60, 60, 60), width=2)
    for k in range(3 + index % 4):
        color = PALETTE[(index + k) % len(PALETTE)]
        x0 = (17 * (index + 3 * k + 1)) % max(1, width - 40)
        y0 = (23 * (index + 5 * k + 2)) % max(1, height - 40)
        x1 = min(width - 6, x0 + 24 + (13 * k) % 60)
        y1 = min(height - 6, y0 + 18 + (11 * k) % 48)
        if k % 3 == 0:
            d.rectangle([x0 + 4, y0 + 4, x1, y1], outline=color, width=3)
        elif k % 3 == 1:
            d.ellipse([x0 + 4, y0 + 4, x1, y1], outline=color, width=3)
        else:
            d.line([x0 + 4, y0 + 4, x1, y1], fill=color, width=3)
    img.save(path, format="PNG", compress_level=6, optimize=False)


def draw_circuit(path: Path) -> None:
    """A schematic four-resistor circuit: battery, wires, zigzag resistors."""
    width, height = 560, 360
    img = Image.new("RGB", (width, height), (255, 255, 255))
    d = ImageDraw.Draw(img)
    wire = (30, 30, 30)
    d.rectangle([60, 60, 500, 300], outline=wire, width=3)
    # battery symbol on the left edge
    d.line([60, 160, 60, 200], fill=(255, 255, 255), width=5)
    d.line([48, 165, 72, 165], fill=wire, width=5)
    d.line([54, 185, 66, 185], fill=wire, width=3)
    # four zigzag resistors along the top and bottom edges
    for i, (cx, cy) in enumerate([(170, 60), (330, 60), (170, 300), (330, 300)]):
        points = []
        for t in range(9):
            x = cx - 40 + t * 10
            y = cy + (12 if t % 2 else -12)
            points.append((x, y))
        d.line([(cx - 48, cy), *points, (cx + 48, cy)], fill=wire, width=3)
        # resistor labels as colored tick marks of increasing length, not text
        d.line([cx - 48, cy - 18, cx - 48 + 6 * (i + 1), cy - 18], fill=PALETTE[i], width=4)
    img.save(path, format="PNG", compress_level=6, optimize=False)


def canonical_record(i: int) -> dict:
    lang = ("zh", "en", "it", "de")[i % 4]
    questions = QUESTIONS[lang]
    question = questions[i % len(questions)]
    if i % 7 == 0:
        # Stretch some questions so multi-line wrapping is exercised.
        question = question + (" " if lang != "zh" else "") + questions[(i + 3) % len(questions)]
    count = 2 + i % 5
    options = OPTION_BANKS[lang][:count]
    has_figure = i % 2 == 0
    return {
        "id": f"det-{i:03d}",
        "source_dataset": ["M3Exam", "CMMU", "M4U", "Pinocchio", "MMMU-Pro"][i % 5],
        "language": lang,
        "subject": SUBJECTS[i % len(SUBJECTS)],
        "question_text": question,
        "options": options,
        "answer_index": i % count,
        "script": "Hanzi" if lang == "zh" else "Latin",
        "figure": {"path": f"figures/fig-{i // 2:02d}.png", "width": None, "height": None}
        if has_figure
        else None,
    }


def make_determinism_corpus() -> None:
    out = FIXTURES / "determinism"
    (out / "figures").mkdir(parents=True, exist_ok=True)
    for j in range(50):
        width = 50 + (j * 97) % 1150  # spans the no-scale and downscale regimes
        height = 40 + (j * 61) % 500
        draw_figure(out / "figures" / f"fig-{j:02d}.png", j, width, height)
    with (out / "records_100.jsonl").open("w", encoding="utf-8") as fh:
        for i in range(100):
            fh.write(json.dumps(canonical_record(i), ensure_ascii=False, sort_keys=True) + "\n")


def make_fig1_corpus() -> None:
    out = FIXTURES / "fig1"
    out.mkdir(parents=True, exist_ok=True)
    draw_circuit(out / "circuit.png")
    record = {
        "id": "fig1-circuit",
        "source_dataset": "M3Exam",
        "language": "en",
        "subject": "Physics",
        "question_text": (
            "The circuit diagram below represents four resistors connected to a "
            "12-volt source. What is the total current in the circuit?"
        ),
        "options": ["0.50 A", "2.0 A", "8.6 A", "24 A"],
        "answer_index": 1,
        "script": "Latin",
        "figure": {"path": "circuit.png", "width": None, "height": None},
    }
    with (out / "record.jsonl").open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def make_source_manifests() -> None:
    out = FIXTURES / "sources"
    (out / "figures").mkdir(parents=True, exist_ok=True)
    for j in range(6):
        draw_figure(out / "figures" / f"src-{j}.png", 100 + j, 200 + 40 * j, 150 + 25 * j)

    # --- M3Exam-shaped JSON Lines: letter keys, per-row language ---
    rows = []
    for i in range(12):
        lang = ("en", "it", "zh")[i % 3]
        rows.append(
            {
                "qid": f"m3-{i:03d}",
                "lang": lang,
                "category": SUBJECTS[i % 5] if i % 4 != 3 else "History",
                "stem": QUESTIONS[lang][i % 8],
                "choices": OPTION_BANKS[lang][: 2 + i % 4],
                "key": "ABCD"[i % (2 + i % 4) if (2 + i % 4) else 0],
                "image": f"figures/src-{i % 6}.png" if i % 2 == 0 else None,
            }
        )
    # malformed rows, each exercising one skip reason
    rows.append({"qid": "m3-bad-1", "lang": "en", "category": "Physics", "key": "A", "image": None, "stem": "No options here?"})
    rows.append({"qid": "m3-bad-2", "lang": "en", "category": "Physics", "stem": "Bad key", "choices": ["a", "b", "c"], "key": "G", "image": None})
    rows.append({"qid": "m3-bad-3", "lang": "en", "category": "Physics", "stem": "   ", "choices": ["a", "b"], "key": "A", "image": None})
    rows.append({"qid": "m3-bad-4", "lang": "en", "category": "Physics", "stem": "Out of range key", "choices": ["a", "b", "c", "d"], "key": "E", "image": None})
    rows.append({"qid": "m3-bad-5", "lang": "en", "category": "Physics", "stem": "Too many options", "choices": ["a", "b", "c", "d", "e", "f", "g"], "key": "A", "image": None})
    with (out / "m3exam.jsonl").open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        fh.write('{"qid": "m3-bad-6", not valid json}\n')
        fh.write("[1, 2, 3]\n")

    # --- CMMU-shaped JSON array: 1-based number keys, zh via override ---
    rows = []
    for i in range(10):
        rows.append(
            {
                "id": f"cmmu-{i:03d}",
                "subject": SUBJECTS[i % 5] if i % 5 != 4 else "Literature",
                "question": ZH_QUESTIONS[i % 8],
                "options": OPTION_BANKS["zh"][: 3 + i % 3],
                "answer": str(1 + i % (3 + i % 3)),
                "figure_path": f"figures/src-{i % 6}.png" if i % 3 == 0 else None,
            }
        )
    rows.append({"id": "cmmu-bad-1", "subject": "Physics", "question": ZH_QUESTIONS[0], "options": OPTION_BANKS["zh"][:4], "answer": "9", "figure_path": None})
    rows.append({"id": "cmmu-bad-2", "subject": "Physics", "options": OPTION_BANKS["zh"][:4], "answer": "1", "figure_path": None})
    (out / "cmmu.json").write_text(
        json.dumps(rows, ensure_ascii=False, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )

    # --- M4U-shaped CSV: 0-based index keys, pipe-separated options ---
    with (out / "m4u.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "subject_area", "question", "options", "answer_idx", "figure"])
        for i in range(10):
            count = 2 + i % 5
            writer.writerow(
                [
                    f"m4u-{i:03d}",
                    SUBJECTS[i % 5] if i % 6 != 5 else "Geography",
                    DE_QUESTIONS[i % 8],
                    "|".join(OPTION_BANKS["de"][:count]),
                    str(i % count),
                    f"figures/src-{i % 6}.png" if i % 4 == 0 else "",
                ]
            )
        writer.writerow(["m4u-bad-1", "Physics", DE_QUESTIONS[0], "|".join(OPTION_BANKS["de"][:3]), "x", ""])
        writer.writerow(["m4u-bad-2", "Physics", DE_QUESTIONS[1], "", "0", ""])


def make_pipeline_config() -> None:
    config = {
        "config_version": 1,
        "output_dir": "out",
        "jobs": 1,
        "languages": ["zh", "en", "it", "de"],
        "sources": [
            {
                "path": "sources/m3exam.jsonl",
                "source_dataset": "M3Exam",
                "field_map": {
                    "qid": "id",
                    "lang": "language",
                    "stem": "question_text",
                    "choices": "options",
                    "key": "answer",
                    "image": "figure",
                },
                "answer_key_style": "letter",
                "subject_field": "category",
                "language_override": None,
                "total_available": 19,
            },
            {
                "path": "sources/cmmu.json",
                "source_dataset": "CMMU",
                "field_map": {
                    "id": "id",
                    "question": "question_text",
                    "options": "options",
                    "answer": "answer",
                    "figure_path": "figure",
                },
                "answer_key_style": "number",
                "subject_field": "subject",
                "language_override": "zh",
                "total_available": 12,
            },
            {
                "path": "sources/m4u.csv",
                "source_dataset": "M4U",
                "field_map": {
                    "id": "id",
                    "question": "question_text",
                    "options": "options",
                    "answer_idx": "answer",
                    "figure": "figure",
                },
                "answer_key_style": "index0",
                "subject_field": "subject_area",
                "language_override": "de",
                "total_available": 12,
            },
        ],
    }
    (FIXTURES / "pipeline.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def make_goldens() -> None:
    """Render the mini corpus and freeze its output digests."""
    sys.path.insert(0, str(ROOT / "src"))
    from examsynth.config import config_digest, default_pipeline_config
    from examsynth.layout import plan_layout
    from examsynth.manifest import IMAGES_DIR, write_dataset
    from examsynth.records import read_records_jsonl
    from examsynth.render import probe_figure, render_batch
    from examsynth.style import sample_style

    records = read_records_jsonl(FIXTURES / "determinism" / "records_100.jsonl")[:10]
    config = default_pipeline_config()
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        jobs = []
        for record in records:
            record = probe_figure(record)
            style = sample_style(record, config.style)
            layout = plan_layout(record, style, config.canvas)
            jobs.append((record, layout, style, config.canvas))
        instances, failures = render_batch(jobs, out / IMAGES_DIR, parallelism=1)
        if failures:
            raise SystemExit(f"golden corpus must render cleanly, got failures: {failures}")
        manifest_path = write_dataset(
            instances, records, out, config.style.global_seed, config_digest(config)
        )
        goldens = {
            "note": (
                "Regression reference for this environment (system fonts + Pillow "
                "build). Regenerate with tools/make_fixtures.py --goldens after "
                "changing fonts, Pillow, or any rendering code."
            ),
            "images": {
                f"{inst.record_id}.png": hashlib.sha256(inst.image_bytes).hexdigest()
                for inst in instances
            },
            "manifest_sha256": hashlib.sha256(manifest_path.read_bytes()).hexdigest(),
        }
    (FIXTURES / "goldens.json").write_text(
        json.dumps(goldens, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--goldens", action="store_true", help="only refresh goldens.json")
    args = parser.parse_args()
    if not args.goldens:
        FIXTURES.mkdir(parents=True, exist_ok=True)
        make_determinism_corpus()
        make_fig1_corpus()
        make_source_manifests()
        make_pipeline_config()
        print(f"fixtures written under {FIXTURES}")
    make_goldens()
    print("goldens refreshed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
