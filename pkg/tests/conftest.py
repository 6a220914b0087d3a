"""Shared fixtures and record builders for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import settings

from examsynth.records import FigureRef, UnifiedRecord

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

FIXTURES = Path(__file__).parent / "fixtures"

# Small word/char banks used by layout property tests.  The hanzi bank stays
# inside the CJK Unified Ideographs base block so the packaged fallback face
# covers every character.
LATIN_WORDS = (
    "circuit current voltage resistor charge field the a total of is what in "
    "measured across between series parallel energy mass acceleration force "
    "reaction compound molecule atom electron proton neutron cell membrane "
    "enzyme equilibrium pressure temperature velocity wavelength frequency"
).split()

HANZI_CHARS = (
    "电路图下示四个阻器连接到伏特源总流是多少化学反应平衡常数温度压强体积"
    "生物细胞膜蛋白质酶基因遗传变异光合作用呼吸能量守恒动量速度加速度力场"
)


def make_record(
    rec_id: str = "r-001",
    language: str = "en",
    question: str = "What is the total current in the circuit?",
    options=("0.50 A", "2.0 A", "8.6 A", "24 A"),
    answer_index: int = 1,
    figure: FigureRef | None = None,
    subject: str = "Physics",
    source: str = "M3Exam",
) -> UnifiedRecord:
    return UnifiedRecord(
        id=rec_id,
        source_dataset=source,
        language=language,
        subject=subject,
        question_text=question,
        options=tuple(options),
        answer_index=answer_index,
        figure=figure,
    )


def random_question(rnd: random.Random, script: str, min_chars: int = 1, max_chars: int = 600) -> str:
    """Build a question string of roughly the requested length."""
    target = rnd.randint(min_chars, max_chars)
    if script == "hanzi":
        return "".join(rnd.choice(HANZI_CHARS) for _ in range(target))
    parts: list[str] = []
    size = 0
    while size < target:
        word = rnd.choice(LATIN_WORDS)
        parts.append(word)
        size += len(word) + 1
    return " ".join(parts)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def determinism_records_path() -> Path:
    return FIXTURES / "determinism" / "records_100.jsonl"


@pytest.fixture(scope="session")
def fig1_dir() -> Path:
    return FIXTURES / "fig1"


@pytest.fixture(scope="session")
def sources_dir() -> Path:
    return FIXTURES / "sources"
