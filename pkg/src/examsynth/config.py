"""Pipeline configuration: one JSON file drives every subcommand.

Schema (all keys except config_version optional; defaults in parentheses):

    {
      "config_version": 1,
      "output_dir": "dataset",          (dataset)
      "jobs": 1,                        (1)
      "languages": ["zh","en","it","de"],
      "subject_allowlist": [...],       (the five science subjects)
      "style": {
        "global_seed": 42,
        "hanzi_fonts": [...], "latin_fonts": [...],
        "color_table": [{"rgb": [0,0,0], "weight": 90}, ...],
        "font_substitutions": {"Arial": "fonts/arial.ttf", ...}
      },
      "canvas": {"width_px": 896, "margin_px": 32, ...},
      "sources": [
        {"path": "m3exam.jsonl", "source_dataset": "M3Exam",
         "field_map": {"qid": "id", ...}, "answer_key_style": "letter",
         "subject_field": "subject", "language_override": null,
         "total_available": 12317}
      ]
    }

Relative paths (sources, output_dir, font substitution files) resolve
against the config file's directory. User font_substitutions merge over the
built-in defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from examsynth.fonts import DEFAULT_SUBSTITUTIONS
from examsynth.ingest import DEFAULT_SUBJECT_ALLOWLIST, AdapterConfig
from examsynth.layout import CanvasConfig
from examsynth.records import SYNTHESIS_LANGUAGES
from examsynth.style import StyleConfig

CONFIG_VERSION = 1


class ConfigError(Exception):
    """The config file is missing, malformed, or violates an invariant."""


@dataclass(frozen=True)
class SourceSpec:
    path: str  # absolute after loading
    adapter: AdapterConfig
    total_available: int


@dataclass(frozen=True)
class PipelineConfig:
    config_version: int = CONFIG_VERSION
    sources: tuple[SourceSpec, ...] = ()
    subject_allowlist: frozenset[str] = DEFAULT_SUBJECT_ALLOWLIST
    languages: tuple[str, ...] = SYNTHESIS_LANGUAGES
    style: StyleConfig = StyleConfig()
    canvas: CanvasConfig = CanvasConfig()
    output_dir: str = "dataset"
    jobs: int = 1


def default_pipeline_config(**overrides) -> PipelineConfig:
    return dataclasses.replace(PipelineConfig(), **overrides)


def _build_style(obj: dict, base: Path) -> StyleConfig:
    substitutions = dict(DEFAULT_SUBSTITUTIONS)
    for font_id, font_path in obj.get("font_substitutions", {}).items():
        p = Path(font_path)
        substitutions[font_id] = str(p if p.is_absolute() else base / p)
    color_table = tuple(
        (tuple(entry["rgb"]), entry["weight"]) for entry in obj["color_table"]
    ) if "color_table" in obj else StyleConfig().color_table
    style = StyleConfig(
        hanzi_fonts=tuple(obj.get("hanzi_fonts", StyleConfig().hanzi_fonts)),
        latin_fonts=tuple(obj.get("latin_fonts", StyleConfig().latin_fonts)),
        color_table=color_table,
        global_seed=obj.get("global_seed", StyleConfig().global_seed),
        font_substitutions=substitutions,
    )
    violations = style.validate()
    if violations:
        raise ConfigError("style config invalid: " + "; ".join(violations))
    return style


def _build_canvas(obj: dict) -> CanvasConfig:
    known = {f.name for f in dataclasses.fields(CanvasConfig)}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"canvas config has unknown keys: {sorted(unknown)}")
    if "background" in obj:
        obj = dict(obj, background=tuple(obj["background"]))
    canvas = CanvasConfig(**obj)
    violations = canvas.validate()
    if violations:
        raise ConfigError("canvas config invalid: " + "; ".join(violations))
    return canvas


def _build_source(obj: dict, base: Path) -> SourceSpec:
    try:
        path = Path(obj["path"])
        if not path.is_absolute():
            path = base / path
        adapter = AdapterConfig(
            source_dataset=obj["source_dataset"],
            field_map=dict(obj["field_map"]),
            answer_key_style=obj["answer_key_style"],
            subject_field=obj["subject_field"],
            language_override=obj.get("language_override"),
        )
        total = int(obj["total_available"])
    except KeyError as exc:
        raise ConfigError(f"source entry missing key: {exc}") from exc
    if not path.is_file():
        raise ConfigError(f"source manifest does not exist: {path}")
    violations = adapter.validate()
    if violations:
        raise ConfigError(f"adapter for {adapter.source_dataset}: " + "; ".join(violations))
    return SourceSpec(path=str(path), adapter=adapter, total_available=total)


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a pipeline config file.

    Raises:
        ConfigError: unreadable file, bad JSON, unknown version, invalid
            embedded configs, or missing referenced paths.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    version = raw.get("config_version")
    if version != CONFIG_VERSION:
        raise ConfigError(
            f"config {path}: config_version must be {CONFIG_VERSION}, got {version!r}"
        )
    base = path.resolve().parent
    out_dir = Path(raw.get("output_dir", "dataset"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    jobs = int(raw.get("jobs", 1))
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    return PipelineConfig(
        config_version=version,
        sources=tuple(_build_source(s, base) for s in raw.get("sources", [])),
        subject_allowlist=frozenset(raw.get("subject_allowlist", DEFAULT_SUBJECT_ALLOWLIST)),
        languages=tuple(raw.get("languages", SYNTHESIS_LANGUAGES)),
        style=_build_style(raw.get("style", {}), base),
        canvas=_build_canvas(raw.get("canvas", {})),
        output_dir=str(out_dir),
        jobs=jobs,
    )


def config_digest(config: PipelineConfig) -> str:
    """Stable hash of the behavior-relevant config.

    Excludes output_dir, jobs, and source paths: datasets produced at any
    parallelism or location from the same styling/layout/filter settings
    must carry the same digest (and therefore byte-identical meta files).
    """
    payload = {
        "config_version": config.config_version,
        "languages": list(config.languages),
        "subject_allowlist": sorted(config.subject_allowlist),
        "style": {
            "hanzi_fonts": list(config.style.hanzi_fonts),
            "latin_fonts": list(config.style.latin_fonts),
            "color_table": [[list(rgb), w] for rgb, w in config.style.color_table],
            "global_seed": config.style.global_seed,
            "font_substitutions": dict(sorted(config.style.font_substitutions.items())),
        },
        "canvas": dataclasses.asdict(config.canvas),
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
