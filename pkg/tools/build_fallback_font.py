#!/usr/bin/env python3
"""Generate src/examsynth/assets/fallback_cjk.ttf deterministically.

The packaged fallback face exists so Hanzi pipelines run on machines with
no Chinese fonts installed. Ideographs are schematic box-and-bar patterns
(64 distinct shapes, shared via composite glyphs), not real hanzi: the
point is full coverage of the CJK Unified Ideographs block with correct
wide metrics and byte-reproducible output, not typography.

Coverage:
  - ASCII 0x20..0x7E and Latin-1 0xA0..0xFF (narrow, 560/1000 em)
  - Latin Extended-A 0x100..0x17F
  - common punctuation: en/em dash, curly quotes, ellipsis
  - CJK symbols and punctuation 0x3000..0x303F (wide)
  - CJK Unified Ideographs 0x4E00..0x9FFF (wide, composites)
  - fullwidth forms 0xFF01..0xFF60 (wide, composites)

Rerunning the script must reproduce the committed file byte for byte:
timestamps are pinned to zero and all content derives from code points.
"""

import sys
from pathlib import Path

from fontTools.fontBuilder import FontBuilder
from fontTools.pens.ttGlyphPen import TTGlyphPen

UPM = 1000
ASCENT = 820
DESCENT = 180
WIDE = 1000
NARROW = 560
PATTERNS = 64

OUT_PATH = Path(__file__).resolve().parent.parent / "src" / "examsynth" / "assets" / "fallback_cjk.ttf"


def pattern_index(codepoint: int) -> int:
    # Knuth multiplicative hash; spreads adjacent code points across patterns.
    return ((codepoint * 2654435761) >> 16) % PATTERNS


def rect(pen, x, y, w, h):
    pen.moveTo((x, y))
    pen.lineTo((x + w, y))
    pen.lineTo((x + w, y + h))
    pen.lineTo((x, y + h))
    pen.closePath()


def draw_box_pattern(bits: int, advance: int, thickness: int = 40):
    """Frame plus up to six bars selected by ``bits``; returns a glyph."""
    pen = TTGlyphPen(None)
    x0 = 60
    x1 = advance - 60
    y0 = -120
    y1 = 760
    w = x1 - x0
    h = y1 - y0
    t = thickness
    rect(pen, x0, y0, w, t)
    rect(pen, x0, y1 - t, w, t)
    rect(pen, x0, y0, t, h)
    rect(pen, x1 - t, y0, t, h)
    for i, frac in enumerate((0.25, 0.5, 0.75)):
        if bits & (1 << i):
            rect(pen, x0 + t, y0 + int(h * frac) - t // 2, w - 2 * t, t)
        if bits & (1 << (i + 3)):
            rect(pen, x0 + int(w * frac) - t // 2, y0 + t, t, h - 2 * t)
    return pen.glyph()


def empty_glyph():
    return TTGlyphPen(None).glyph()


_PATTERN_NAMES = {f"p{i:02d}": None for i in range(PATTERNS)}


def composite(base_name: str):
    # TTGlyphPen only membership-tests the glyph set when adding components.
    pen = TTGlyphPen(_PATTERN_NAMES)
    pen.addComponent(base_name, (1, 0, 0, 1, 0, 0))
    return pen.glyph()


def narrow_codepoints():
    points = list(range(0x20, 0x7F)) + list(range(0xA0, 0x100)) + list(range(0x100, 0x180))
    points += [0x2013, 0x2014, 0x2018, 0x2019, 0x201C, 0x201D, 0x2026]
    return points


def wide_codepoints():
    return list(range(0x3000, 0x3040)) + list(range(0xFF01, 0xFF61))


def ideograph_codepoints():
    return list(range(0x4E00, 0xA000))


def build() -> bytes:
    glyph_order = [".notdef"]
    glyphs = {}
    advances = {}
    cmap = {}

    glyphs[".notdef"] = draw_box_pattern(0b111111, NARROW)
    advances[".notdef"] = NARROW

    for i in range(PATTERNS):
        name = f"p{i:02d}"
        glyph_order.append(name)
        glyphs[name] = draw_box_pattern(i, WIDE)
        advances[name] = WIDE

    blank = {0x20, 0xA0, 0x3000}
    for cp in narrow_codepoints():
        name = f"uni{cp:04X}"
        glyph_order.append(name)
        glyphs[name] = empty_glyph() if cp in blank else draw_box_pattern(
            pattern_index(cp), NARROW, thickness=30
        )
        advances[name] = NARROW
        cmap[cp] = name

    for cp in wide_codepoints() + ideograph_codepoints():
        name = f"uni{cp:04X}"
        glyph_order.append(name)
        if cp in blank:
            glyphs[name] = empty_glyph()
        else:
            glyphs[name] = composite(f"p{pattern_index(cp):02d}")
        advances[name] = WIDE
        cmap[cp] = name

    fb = FontBuilder(UPM, isTTF=True)
    fb.setupGlyphOrder(glyph_order)
    fb.setupCharacterMap(cmap)
    fb.setupGlyf(glyphs)
    glyf = fb.font["glyf"]
    metrics = {}
    for name in glyph_order:
        g = glyf[name]
        metrics[name] = (advances[name], getattr(g, "xMin", 0) or 0)
    fb.setupHorizontalMetrics(metrics)
    fb.setupHorizontalHeader(ascent=ASCENT, descent=-DESCENT)
    fb.setupNameTable(
        {
            "familyName": "ExamSynth Fallback CJK",
            "styleName": "Regular",
            "uniqueFontIdentifier": "examsynth-fallback-cjk-1.0",
            "fullName": "ExamSynth Fallback CJK Regular",
            "psName": "ExamSynthFallbackCJK-Regular",
            "version": "Version 1.0",
        }
    )
    fb.setupOS2(
        sTypoAscender=ASCENT,
        sTypoDescender=-DESCENT,
        sTypoLineGap=0,
        usWinAscent=ASCENT,
        usWinDescent=DESCENT,
    )
    fb.setupPost(keepGlyphNames=False)
    fb.font["head"].created = 0
    fb.font["head"].modified = 0
    fb.font.recalcTimestamp = False

    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    fb.save(str(OUT_PATH))
    return OUT_PATH.read_bytes()


if __name__ == "__main__":
    data = build()
    print(f"wrote {OUT_PATH} ({len(data)} bytes)")
    sys.exit(0)
