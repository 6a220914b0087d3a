"""Measured page geometry: question lines on top, figure, then options.

All coordinates are integer pixels on a fixed-width, variable-height canvas.
The layout stage owns every geometric decision (wrapping, figure scaling,
vertical stacking); rendering only executes the plan, so byte-stable output
reduces to this module being a pure function of its inputs.

Wrapping is greedy first-fit. Latin text breaks only at whitespace and the
whitespace at a break is consumed; Hanzi text may break between any two
characters and concatenating the lines restores the input exactly.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass

from examsynth.fonts import line_metrics, make_measurer, require_coverage
from examsynth.records import Script, UnifiedRecord
from examsynth.style import LabelFormat, StylePlan

QUESTION_LINE = "question_line"
FIGURE = "figure"
OPTION_LINE = "option_line"

_WS_SPLIT = re.compile(r"(\s+)")


class LineOverflowError(Exception):
    """An unbreakable unit is wider than the available line width."""

    def __init__(self, token: str, width: float, max_width: int) -> None:
        self.token = token
        super().__init__(
            f"unbreakable token {token!r} measures {width:.0f}px, "
            f"wider than the {max_width}px line"
        )


@dataclass(frozen=True)
class CanvasConfig:
    width_px: int = 896
    margin_px: int = 32
    font_size_px: int = 28
    line_spacing: float = 1.3
    block_gap_px: int = 24
    max_figure_width_ratio: float = 0.9
    background: tuple[int, int, int] = (255, 255, 255)
    option_columns: str = "one"  # "one" | "two"
    # PNG encoder settings are layout-adjacent config so one object pins the
    # whole deterministic-output contract.
    png_compress_level: int = 6

    def validate(self) -> list[str]:
        violations: list[str] = []
        if self.width_px <= 2 * self.margin_px:
            violations.append("width_px must exceed twice margin_px")
        if self.font_size_px <= 0:
            violations.append("font_size_px must be positive")
        if self.block_gap_px < 0 or self.margin_px < 0:
            violations.append("gaps and margins must be non-negative")
        if not 0 < self.max_figure_width_ratio <= 1:
            violations.append("max_figure_width_ratio must be in (0, 1]")
        if self.option_columns not in ("one", "two"):
            violations.append(f"option_columns must be 'one' or 'two', got {self.option_columns!r}")
        if self.line_spacing <= 0:
            violations.append("line_spacing must be positive")
        if not 0 <= self.png_compress_level <= 9:
            violations.append("png_compress_level must be in 0..9")
        return violations

    @property
    def content_width(self) -> int:
        return self.width_px - 2 * self.margin_px

    @property
    def line_height(self) -> int:
        return int(self.font_size_px * self.line_spacing + 0.5)


@dataclass(frozen=True)
class Block:
    """One positioned box. Text blocks carry their glyph-run origin."""

    kind: str
    x: int
    y: int
    w: int
    h: int
    text: str | None = None
    origin_x: int | None = None
    origin_y: int | None = None

    @property
    def bottom(self) -> int:
        return self.y + self.h

    def overlaps(self, other: "Block") -> bool:
        return not (
            self.x + self.w <= other.x
            or other.x + other.w <= self.x
            or self.y + self.h <= other.y
            or other.y + other.h <= self.y
        )


@dataclass(frozen=True)
class LayoutPlan:
    width: int
    height: int
    blocks: tuple[Block, ...]

    def to_json_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "blocks": [
                {
                    "kind": b.kind,
                    "box": [b.x, b.y, b.w, b.h],
                    "text": b.text,
                    "origin": None if b.origin_x is None else [b.origin_x, b.origin_y],
                }
                for b in self.blocks
            ],
        }


def layout_digest(plan: LayoutPlan) -> str:
    """Stable hash of the plan for provenance records."""
    canonical = json.dumps(plan.to_json_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def wrap_text(text: str, measure, max_width_px: int, script: Script) -> list[str]:
    """Greedy first-fit wrap of ``text`` into lines of at most ``max_width_px``.

    ``measure`` maps a string to its rendered width in pixels. Latin input
    is treated as words separated by whitespace runs; breaks consume the
    separating run, and leading/trailing whitespace is dropped. Hanzi input
    may break anywhere, and the lines concatenate back to the input.

    Raises:
        LineOverflowError: some unbreakable unit exceeds max_width_px.
    """
    if not text:
        return []
    if script is Script.HANZI:
        return _wrap_anywhere(text, measure, max_width_px)
    return _wrap_at_whitespace(text, measure, max_width_px)


def _wrap_at_whitespace(text: str, measure, max_width_px: int) -> list[str]:
    parts = _WS_SPLIT.split(text)
    words = parts[0::2]
    seps = [""] + parts[1::2]
    lines: list[str] = []
    current = ""
    for sep, word in zip(seps, words):
        if not word:
            continue
        candidate = word if not current else current + sep + word
        if measure(candidate) <= max_width_px:
            current = candidate
            continue
        width = measure(word)
        if width > max_width_px:
            raise LineOverflowError(word, width, max_width_px)
        if current:
            lines.append(current)
        current = word
    if current:
        lines.append(current)
    return lines


def _wrap_anywhere(text: str, measure, max_width_px: int) -> list[str]:
    lines: list[str] = []
    current = ""
    for ch in text:
        candidate = current + ch
        if measure(candidate) <= max_width_px:
            current = candidate
            continue
        width = measure(ch)
        if width > max_width_px:
            raise LineOverflowError(ch, width, max_width_px)
        lines.append(current)
        current = ch
    if current:
        lines.append(current)
    return lines


def format_options(options, label_format: LabelFormat) -> list[str]:
    """Prefix options with their labels: "A. x" / "(1) x"."""
    if label_format is LabelFormat.LETTERS:
        return [f"{chr(ord('A') + i)}. {opt}" for i, opt in enumerate(options)]
    return [f"({i + 1}) {opt}" for i, opt in enumerate(options)]


def scaled_figure_size(src_w: int, src_h: int, config: CanvasConfig) -> tuple[int, int]:
    """Figure size after the fit-to-width rule: downscale only, keep aspect."""
    if src_w <= 0 or src_h <= 0:
        raise ValueError(f"figure has zero or negative dimension: {src_w}x{src_h}")
    max_w = int(config.max_figure_width_ratio * config.content_width)
    if src_w <= max_w:
        return src_w, src_h
    return max_w, max(1, int(src_h * max_w / src_w + 0.5))


def plan_layout(record: UnifiedRecord, style: StylePlan, config: CanvasConfig) -> LayoutPlan:
    """Position every line and the figure for one record.

    Stacking order is fixed: question lines from the top margin, then the
    figure (horizontally centered), then one option per line, separated by
    block gaps. Two-column options are used only when configured and every
    labeled option fits a half-width column.
    """
    violations = config.validate()
    if violations:
        raise ValueError("invalid canvas config: " + "; ".join(violations))
    measure = make_measurer(style.resolved_font_path, config.font_size_px)
    ascent, descent = line_metrics(style.resolved_font_path, config.font_size_px)
    line_h = config.line_height
    # Vertical slack between line box and glyph box, split evenly.
    glyph_dy = max(0, (line_h - (ascent + descent)) // 2)
    margin = config.margin_px
    content_w = config.content_width

    labeled = format_options(record.options, style.option_label_format)
    for chunk in [record.question_text, *labeled]:
        require_coverage(style.resolved_font_path, chunk)

    blocks: list[Block] = []
    y = margin

    def add_line(kind: str, text: str, x: int) -> None:
        nonlocal y
        w = min(content_w, int(measure(text) + 0.999)) if text else 1
        blocks.append(
            Block(
                kind=kind,
                x=x,
                y=y,
                w=max(1, w),
                h=line_h,
                text=text,
                origin_x=x,
                origin_y=y + glyph_dy,
            )
        )
        y += line_h

    for line in wrap_text(record.question_text, measure, content_w, record.script):
        add_line(QUESTION_LINE, line, margin)

    if record.figure is not None:
        if not record.figure.has_dimensions:
            raise ValueError(f"record {record.id}: figure dimensions unknown at layout time")
        fig_w, fig_h = scaled_figure_size(record.figure.width, record.figure.height, config)
        y += config.block_gap_px
        fig_x = margin + (content_w - fig_w) // 2
        blocks.append(Block(kind=FIGURE, x=fig_x, y=y, w=fig_w, h=fig_h))
        y += fig_h

    y += config.block_gap_px

    col_gap = config.block_gap_px
    col_w = (content_w - col_gap) // 2
    two_columns = config.option_columns == "two" and all(
        measure(text) <= col_w for text in labeled
    )
    if two_columns:
        for row_start in range(0, len(labeled), 2):
            row = labeled[row_start : row_start + 2]
            row_y = y
            for col, text in enumerate(row):
                x = margin + col * (col_w + col_gap)
                w = max(1, int(measure(text) + 0.999))
                blocks.append(
                    Block(
                        kind=OPTION_LINE,
                        x=x,
                        y=row_y,
                        w=w,
                        h=line_h,
                        text=text,
                        origin_x=x,
                        origin_y=row_y + glyph_dy,
                    )
                )
            y = row_y + line_h
    else:
        for text in labeled:
            for line in wrap_text(text, measure, content_w, record.script):
                add_line(OPTION_LINE, line, margin)

    height = (blocks[-1].bottom if blocks else margin) + margin
    return LayoutPlan(width=config.width_px, height=height, blocks=tuple(blocks))


def check_layout_invariants(plan: LayoutPlan, config: CanvasConfig) -> list[str]:
    """Structural checks every plan must satisfy; empty list means clean."""
    violations: list[str] = []
    margin = config.margin_px
    for i, block in enumerate(plan.blocks):
        if block.x < margin or block.x + block.w > plan.width - margin:
            violations.append(f"block {i} ({block.kind}) outside horizontal margins")
        if block.y < margin or block.bottom > plan.height - margin:
            violations.append(f"block {i} ({block.kind}) outside vertical margins")
    for i, a in enumerate(plan.blocks):
        for j in range(i + 1, len(plan.blocks)):
            if a.overlaps(plan.blocks[j]):
                violations.append(f"blocks {i} and {j} overlap")
    for earlier, later in ((QUESTION_LINE, FIGURE), (QUESTION_LINE, OPTION_LINE), (FIGURE, OPTION_LINE)):
        tops_later = [b.y for b in plan.blocks if b.kind == later]
        bottoms_earlier = [b.bottom for b in plan.blocks if b.kind == earlier]
        if tops_later and bottoms_earlier and min(tops_later) < max(bottoms_earlier):
            violations.append(f"{later} starts above the end of {earlier}")
    if plan.blocks and plan.height != plan.blocks[-1].bottom + margin:
        violations.append("canvas height != last block bottom + margin")
    return violations
