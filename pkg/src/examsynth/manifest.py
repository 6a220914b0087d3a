"""Dataset manifest emission and end-to-end dataset validation.

A finished dataset directory looks like:

    <out_dir>/
      images/<record_id>.png   one per successfully rendered record
      manifest.jsonl           one row per image, sorted by record_id
      dataset.meta.json        global seed, pipeline version, config digest

Gold answers live only in the manifest, never inside the image: the image
must contain exactly what a test-taker sees. Manifests are sorted and
line-delimited so dataset diffs stay reviewable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from PIL import Image

from examsynth.records import UnifiedRecord, iter_jsonl
from examsynth.render import RenderedInstance

MANIFEST_NAME = "manifest.jsonl"
META_NAME = "dataset.meta.json"
IMAGES_DIR = "images"


@dataclass(frozen=True)
class DatasetManifestRow:
    record_id: str
    image_path: str  # relative to the manifest's directory, POSIX separators
    language: str
    subject: str
    source_dataset: str
    answer_index: int
    option_count: int
    label_format: str  # "letters" | "numbers"
    has_figure: bool
    style_digest: str
    width: int
    height: int

    def to_json_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "image_path": self.image_path,
            "language": self.language,
            "subject": self.subject,
            "source_dataset": self.source_dataset,
            "answer_index": self.answer_index,
            "option_count": self.option_count,
            "label_format": self.label_format,
            "has_figure": self.has_figure,
            "style_digest": self.style_digest,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DatasetManifestRow":
        return cls(**{k: obj[k] for k in cls.__dataclass_fields__})


def style_digest(instance: RenderedInstance) -> str:
    """Stable hash of the style provenance.

    Excludes the resolved font path on purpose: the same logical style must
    digest identically on machines whose font files live elsewhere.
    """
    payload = json.dumps(
        {
            "font_id": instance.font_id,
            "text_color": list(instance.text_color),
            "label_format": instance.option_label_format.value,
            "record_seed": instance.record_seed,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def write_dataset(
    instances: list[RenderedInstance],
    records: list[UnifiedRecord],
    out_dir: str | Path,
    global_seed: int,
    config_digest: str,
) -> Path:
    """Write manifest.jsonl and dataset.meta.json; images must already exist.

    Raises:
        ValueError: an instance's image file is missing, or an instance has
            no matching record.
    """
    out = Path(out_dir)
    by_id = {record.id: record for record in records}
    rows: list[DatasetManifestRow] = []
    for instance in instances:
        record = by_id.get(instance.record_id)
        if record is None:
            raise ValueError(f"instance {instance.record_id} has no matching record")
        image_rel = f"{IMAGES_DIR}/{instance.record_id}.png"
        if not (out / image_rel).is_file():
            raise ValueError(f"record {instance.record_id}: image file missing: {image_rel}")
        rows.append(
            DatasetManifestRow(
                record_id=instance.record_id,
                image_path=image_rel,
                language=record.language,
                subject=record.subject,
                source_dataset=record.source_dataset,
                answer_index=record.answer_index,
                option_count=record.option_count,
                label_format=instance.option_label_format.value,
                has_figure=record.figure is not None,
                style_digest=style_digest(instance),
                width=instance.width,
                height=instance.height,
            )
        )
    rows.sort(key=lambda row: row.record_id)

    manifest_path = out / MANIFEST_NAME
    with manifest_path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row.to_json_dict(), ensure_ascii=False, sort_keys=True) + "\n")

    pipeline_version = instances[0].pipeline_version if instances else ""
    meta = {
        "global_seed": global_seed,
        "pipeline_version": pipeline_version,
        "config_digest": config_digest,
        "row_count": len(rows),
    }
    (out / META_NAME).write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path


def read_manifest(manifest_path: str | Path) -> list[DatasetManifestRow]:
    return [DatasetManifestRow.from_json_dict(obj) for _n, obj in iter_jsonl(manifest_path)]


@dataclass(frozen=True)
class ValidationReport:
    rows_checked: int
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_dataset(manifest_path: str | Path) -> ValidationReport:
    """Check every manifest row against its invariants and its image file.

    Collects all violations instead of stopping at the first. An unreadable
    manifest is fatal and raises OSError.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    violations: list[str] = []
    rows = 0
    previous_id: str | None = None
    for lineno, obj in iter_jsonl(manifest_path):
        rows += 1
        try:
            row = DatasetManifestRow.from_json_dict(obj)
        except (KeyError, TypeError) as exc:
            violations.append(f"line {lineno}: malformed row: {exc}")
            continue
        if previous_id is not None and row.record_id <= previous_id:
            violations.append(f"line {lineno}: rows not sorted by record_id")
        previous_id = row.record_id
        if not row.language:
            violations.append(f"{row.record_id}: language is empty")
        if not 0 <= row.answer_index < row.option_count:
            violations.append(
                f"{row.record_id}: answer_index {row.answer_index} out of range "
                f"for {row.option_count} options"
            )
        if row.label_format not in ("letters", "numbers"):
            violations.append(f"{row.record_id}: unknown label_format {row.label_format!r}")
        image_path = base / row.image_path
        if not image_path.is_file():
            violations.append(f"{row.record_id}: image file missing: {row.image_path}")
            continue
        try:
            with Image.open(image_path) as img:
                img.load()
                width, height = img.size
        except Exception as exc:
            violations.append(f"{row.record_id}: image not decodable: {exc}")
            continue
        if (width, height) != (row.width, row.height):
            violations.append(
                f"{row.record_id}: image is {width}x{height}, "
                f"manifest records {row.width}x{row.height}"
            )
    return ValidationReport(rows_checked=rows, violations=tuple(violations))
