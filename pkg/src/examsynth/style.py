"""Seeded per-record sampling of rendering style: font, text color, labels.

Every record gets its own PRNG stream seeded from (global seed, record id),
so the sampled style is a pure function of the record and the config. The
draw order is fixed and load-bearing for reproducibility:

    1. font       (uniform over the script's font list)
    2. text color (weighted over the grayscale table)
    3. label format (uniform over letters/numbers)

Changing this order changes every output image; do not reorder.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from examsynth.fonts import DEFAULT_SUBSTITUTIONS, resolve_font
from examsynth.records import Script, UnifiedRecord
from examsynth.rng import XorShift64Star, derive_record_seed

__all__ = [
    "LabelFormat",
    "StyleConfig",
    "StylePlan",
    "derive_record_seed",
    "sample_style",
]

DEFAULT_GLOBAL_SEED = 42

DEFAULT_HANZI_FONTS = (
    "Microsoft YaHei",
    "SimSun",
    "FangSong",
    "SimHei",
    "Alibaba PuHuiTi Regular",
)

DEFAULT_LATIN_FONTS = (
    "Arial",
    "Times New Roman",
    "Courier New",
    "Verdana",
    "Calibri",
)

# (RGB, weight%) rows: near-black dominates at 90%, five lighter grays at 2%.
DEFAULT_COLOR_TABLE = (
    ((0, 0, 0), 90),
    ((20, 20, 20), 2),
    ((43, 43, 43), 2),
    ((82, 82, 82), 2),
    ((138, 138, 138), 2),
    ((168, 168, 168), 2),
)


class LabelFormat(enum.Enum):
    LETTERS = "letters"
    NUMBERS = "numbers"


@dataclass(frozen=True)
class StyleConfig:
    hanzi_fonts: tuple[str, ...] = DEFAULT_HANZI_FONTS
    latin_fonts: tuple[str, ...] = DEFAULT_LATIN_FONTS
    color_table: tuple[tuple[tuple[int, int, int], int], ...] = DEFAULT_COLOR_TABLE
    global_seed: int = DEFAULT_GLOBAL_SEED
    font_substitutions: dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_SUBSTITUTIONS)
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "hanzi_fonts", tuple(self.hanzi_fonts))
        object.__setattr__(self, "latin_fonts", tuple(self.latin_fonts))
        object.__setattr__(
            self,
            "color_table",
            tuple((tuple(rgb), weight) for rgb, weight in self.color_table),
        )

    def validate(self) -> list[str]:
        """Return every violated config invariant; empty means usable."""
        violations: list[str] = []
        if not self.hanzi_fonts:
            violations.append("hanzi_fonts is empty")
        if not self.latin_fonts:
            violations.append("latin_fonts is empty")
        if not self.color_table:
            violations.append("color_table is empty")
        total = sum(weight for _rgb, weight in self.color_table)
        if total != 100:
            violations.append(f"color weights sum to {total}, expected 100")
        for rgb, weight in self.color_table:
            if len(rgb) != 3 or len(set(rgb)) != 1:
                violations.append(f"color {rgb} is not grayscale (equal components)")
            if any(not 0 <= c <= 255 for c in rgb):
                violations.append(f"color {rgb} has components outside 0..255")
            if weight < 0:
                violations.append(f"color {rgb} has negative weight {weight}")
        return violations

    def fonts_for(self, script: Script) -> tuple[str, ...]:
        return self.hanzi_fonts if script is Script.HANZI else self.latin_fonts


@dataclass(frozen=True)
class StylePlan:
    """The sampled rendering choices for one record, plus their seed."""

    font_id: str
    resolved_font_path: str
    text_color: tuple[int, int, int]
    option_label_format: LabelFormat
    record_seed: int


def sample_style(record: UnifiedRecord, config: StyleConfig) -> StylePlan:
    """Draw one StylePlan for ``record`` under ``config``.

    Pure: depends only on (record.id, record.script, config). Raises
    UnresolvedFontError when the drawn font identifier cannot be mapped to a
    font file through config.font_substitutions or a filesystem search.
    """
    seed = derive_record_seed(config.global_seed, record.id)
    rng = XorShift64Star(seed)

    fonts = config.fonts_for(record.script)
    font_id = fonts[rng.randbelow(len(fonts))]

    colors = [rgb for rgb, _w in config.color_table]
    weights = [w for _rgb, w in config.color_table]
    text_color = colors[rng.weighted_choice(colors, weights)]

    label_format = (LabelFormat.LETTERS, LabelFormat.NUMBERS)[rng.randbelow(2)]

    resolved = resolve_font(font_id, config.font_substitutions)
    return StylePlan(
        font_id=font_id,
        resolved_font_path=resolved,
        text_color=text_color,
        option_label_format=label_format,
        record_seed=seed,
    )
