"""Rasterize layout plans into byte-reproducible PNG images.

Rendering executes a LayoutPlan literally: fill background, draw each text
block at its precomputed glyph origin, paste the (bilinear-resampled)
figure at its box. All stochastic choices were made upstream by the style
stage, so two renders of the same inputs are byte-identical. Encoder
settings (zlib level, no optimizer passes) are pinned in CanvasConfig for
the same reason.
"""

from __future__ import annotations

import io
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from PIL import Image, ImageDraw

from examsynth import __version__ as PIPELINE_VERSION
from examsynth.fonts import load_face, require_coverage
from examsynth.layout import FIGURE, CanvasConfig, LayoutPlan, layout_digest
from examsynth.records import FigureRef, UnifiedRecord, with_figure_dimensions
from examsynth.style import LabelFormat, StylePlan

# Record ids become file names; reject anything that cannot be one safely.
# fullmatch, not match: $ would tolerate a trailing newline.
_SAFE_ID = re.compile(r"[A-Za-z0-9._-]+")


class RenderError(Exception):
    """A per-record rendering failure (bad figure, bad id, missing glyphs)."""


@dataclass(frozen=True)
class RenderedInstance:
    """Finished image plus the provenance needed to reproduce it."""

    image_bytes: bytes
    width: int
    height: int
    record_id: str
    font_id: str
    resolved_font_path: str
    text_color: tuple[int, int, int]
    option_label_format: LabelFormat
    record_seed: int
    layout_digest: str
    pipeline_version: str


def is_safe_record_id(record_id: str) -> bool:
    return bool(_SAFE_ID.fullmatch(record_id)) and record_id not in (".", "..")


def _open_figure(figure: FigureRef) -> Image.Image:
    try:
        if figure.path is not None:
            img = Image.open(figure.path)
            img.load()
        else:
            img = Image.open(io.BytesIO(figure.data))
            img.load()
    except FileNotFoundError as exc:
        raise RenderError(f"figure file not found: {figure.path}") from exc
    except Exception as exc:  # Pillow raises various decode errors
        raise RenderError(f"undecodable figure: {exc}") from exc
    # Transparent figures sit on the white page, not on black.
    if img.mode in ("RGBA", "LA") or (img.mode == "P" and "transparency" in img.info):
        rgba = img.convert("RGBA")
        base = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
        base.alpha_composite(rgba)
        return base.convert("RGB")
    return img.convert("RGB")


def probe_figure(record: UnifiedRecord) -> UnifiedRecord:
    """Fill in figure pixel dimensions by decoding the image header."""
    if record.figure is None or record.figure.has_dimensions:
        return record
    img = _open_figure(record.figure)
    return with_figure_dimensions(record, img.width, img.height)


def render_instance(
    record: UnifiedRecord,
    layout: LayoutPlan,
    style: StylePlan,
    config: CanvasConfig,
) -> RenderedInstance:
    """Draw one record's page and encode it as PNG."""
    canvas = Image.new("RGB", (layout.width, layout.height), config.background)
    draw = ImageDraw.Draw(canvas)
    face = load_face(style.resolved_font_path, config.font_size_px)

    for block in layout.blocks:
        if block.kind == FIGURE:
            if record.figure is None:
                raise RenderError("layout contains a figure block but record has no figure")
            fig = _open_figure(record.figure)
            if fig.size != (block.w, block.h):
                fig = fig.resize((block.w, block.h), Image.Resampling.BILINEAR)
            canvas.paste(fig, (block.x, block.y))
        elif block.text is not None:
            require_coverage(style.resolved_font_path, block.text)
            draw.text(
                (block.origin_x, block.origin_y),
                block.text,
                font=face,
                fill=style.text_color,
                anchor="la",
            )

    buf = io.BytesIO()
    canvas.save(buf, format="PNG", compress_level=config.png_compress_level, optimize=False)
    return RenderedInstance(
        image_bytes=buf.getvalue(),
        width=layout.width,
        height=layout.height,
        record_id=record.id,
        font_id=style.font_id,
        resolved_font_path=style.resolved_font_path,
        text_color=style.text_color,
        option_label_format=style.option_label_format,
        record_seed=style.record_seed,
        layout_digest=layout_digest(layout),
        pipeline_version=PIPELINE_VERSION,
    )


def _render_job(job) -> RenderedInstance:
    record, layout, style, config = job
    return render_instance(record, layout, style, config)


def render_batch(
    jobs: Sequence[tuple[UnifiedRecord, LayoutPlan, StylePlan, CanvasConfig]],
    output_dir: str | Path,
    parallelism: int = 1,
) -> tuple[list[RenderedInstance], list[tuple[str, str]]]:
    """Render many records, writing `<record_id>.png` per success.

    Failures are isolated per record and returned as (record_id, reason)
    pairs; one bad figure never aborts the batch. The output file set and
    bytes are identical for every parallelism level because each image
    depends only on its own job and the writer runs in this process.

    Raises:
        OSError: output_dir cannot be created or written (fatal).
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    instances: list[RenderedInstance] = []
    failures: list[tuple[str, str]] = []

    def handle(record_id: str, result, error: Exception | None) -> None:
        if error is not None:
            failures.append((record_id, str(error)))
            return
        (out / f"{record_id}.png").write_bytes(result.image_bytes)
        instances.append(result)

    checked: list[tuple[int, tuple]] = []
    for index, job in enumerate(jobs):
        record_id = job[0].id
        if not is_safe_record_id(record_id):
            failures.append((record_id, "record id is not filesystem-safe"))
            continue
        checked.append((index, job))

    if parallelism <= 1 or len(checked) <= 1:
        for _index, job in checked:
            try:
                handle(job[0].id, _render_job(job), None)
            except Exception as exc:
                handle(job[0].id, None, exc)
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [(job[0].id, pool.submit(_render_job, job)) for _index, job in checked]
            for record_id, future in futures:
                try:
                    handle(record_id, future.result(), None)
                except Exception as exc:
                    handle(record_id, None, exc)
    return instances, failures
