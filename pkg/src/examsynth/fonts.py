"""Font identifier resolution, glyph coverage checks, and face caching.

Style configs name fonts by the identifiers rendered exam papers commonly
use (SimSun, Arial, ...). Those families are proprietary and usually absent
from build machines, so resolution goes through a substitution map from
identifier to an available font file; the substitution is kept in
provenance by the styling stage. Identifiers without a substitution entry
are looked up as files in the configured search directories before failing.

The package ships ``assets/fallback_cjk.ttf``, a generated placeholder face
covering the CJK Unified Ideographs block plus basic Latin and fullwidth
punctuation. It exists so Hanzi pipelines are runnable and byte-reproducible
on machines with no Chinese fonts installed; its ideograph glyphs are
schematic boxes, not real hanzi shapes.
"""

from __future__ import annotations

import functools
import os
from pathlib import Path

from fontTools.ttLib import TTFont
from PIL import ImageFont

PACKAGE_ASSET_DIR = Path(__file__).resolve().parent / "assets"
FALLBACK_CJK_PATH = PACKAGE_ASSET_DIR / "fallback_cjk.ttf"

_SYSTEM_FONT_DIRS = (
    "/usr/share/fonts",
    "/usr/local/share/fonts",
    os.path.expanduser("~/.fonts"),
    os.path.expanduser("~/.local/share/fonts"),
)

_DEJAVU = "/usr/share/fonts/truetype/dejavu"

# Metric stand-ins for the styling defaults. Latin identifiers map onto the
# DejaVu family by rough shape class (sans, serif, mono); all Hanzi
# identifiers share the packaged fallback face.
DEFAULT_SUBSTITUTIONS: dict[str, str] = {
    "Arial": f"{_DEJAVU}/DejaVuSans.ttf",
    "Times New Roman": f"{_DEJAVU}/DejaVuSerif.ttf",
    "Courier New": f"{_DEJAVU}/DejaVuSansMono.ttf",
    "Verdana": f"{_DEJAVU}/DejaVuSans-Bold.ttf",
    "Calibri": f"{_DEJAVU}/DejaVuSerif-Bold.ttf",
    "Microsoft YaHei": str(FALLBACK_CJK_PATH),
    "SimSun": str(FALLBACK_CJK_PATH),
    "FangSong": str(FALLBACK_CJK_PATH),
    "SimHei": str(FALLBACK_CJK_PATH),
    "Alibaba PuHuiTi Regular": str(FALLBACK_CJK_PATH),
}


class UnresolvedFontError(Exception):
    """Raised when a font identifier maps to no available font file."""


class MissingGlyphError(Exception):
    """Raised when a font cannot draw some required code points."""

    def __init__(self, font_path: str, codepoints: list[int]) -> None:
        self.font_path = font_path
        self.codepoints = codepoints
        listing = ", ".join(f"U+{cp:04X}" for cp in codepoints[:10])
        if len(codepoints) > 10:
            listing += f", ... ({len(codepoints)} total)"
        super().__init__(f"font {font_path} lacks glyphs for: {listing}")


def resolve_font(font_id: str, substitutions: dict[str, str] | None = None) -> str:
    """Map a font identifier to an existing font file path.

    Resolution order: the substitution map, then a file named after the
    identifier (``<font_id>.ttf``/``.otf``, spaces optionally stripped) under
    the standard font directories.

    Raises:
        UnresolvedFontError: nothing matched, or the mapped file is missing.
    """
    if substitutions and font_id in substitutions:
        path = substitutions[font_id]
        if not os.path.isfile(path):
            raise UnresolvedFontError(
                f"substitution for {font_id!r} points to missing file {path}"
            )
        return path
    candidates = {font_id, font_id.replace(" ", "")}
    for root in _SYSTEM_FONT_DIRS:
        if not os.path.isdir(root):
            continue
        for dirpath, _dirnames, filenames in os.walk(root):
            for filename in filenames:
                stem, ext = os.path.splitext(filename)
                if ext.lower() in (".ttf", ".otf") and stem in candidates:
                    return os.path.join(dirpath, filename)
    raise UnresolvedFontError(
        f"font {font_id!r}: no substitution entry and no font file of that name found"
    )


@functools.lru_cache(maxsize=32)
def _cmap_for(path: str) -> frozenset[int]:
    with TTFont(path, lazy=True) as font:
        return frozenset(font.getBestCmap().keys())


def missing_codepoints(font_path: str, text: str) -> list[int]:
    """Code points in ``text`` the font has no glyph for, sorted, deduplicated.

    Control and format characters (newlines in multi-line text) are exempt;
    they are consumed by layout, never rasterized.
    """
    cmap = _cmap_for(font_path)
    missing = set()
    for ch in text:
        cp = ord(ch)
        if cp in cmap:
            continue
        if ch in ("\n", "\r", "\t"):
            continue
        missing.add(cp)
    return sorted(missing)


def require_coverage(font_path: str, text: str) -> None:
    missing = missing_codepoints(font_path, text)
    if missing:
        raise MissingGlyphError(font_path, missing)


@functools.lru_cache(maxsize=64)
def load_face(font_path: str, size_px: int) -> ImageFont.FreeTypeFont:
    """Load a sized font face, cached per (path, size) within the process."""
    return ImageFont.truetype(font_path, size_px)


def line_metrics(font_path: str, size_px: int) -> tuple[int, int]:
    """(ascent, descent) in pixels for the face at the given size."""
    return load_face(font_path, size_px).getmetrics()


def make_measurer(font_path: str, size_px: int):
    """Text-width function (string -> pixels) bound to one sized face."""
    face = load_face(font_path, size_px)

    def measure(text: str) -> float:
        return face.getlength(text)

    return measure
