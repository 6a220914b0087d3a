"""Command-line front end: ingest -> synthesize -> verify -> eval.

Machine-readable reports go to stdout and to files; human logs go to
stderr. Output artifacts never contain timestamps, so identical inputs
produce identical bytes.

Exit codes: 0 success, 1 usage/config error, 2 fatal I/O error,
3 validation failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from examsynth import __version__
from examsynth.config import (
    ConfigError,
    PipelineConfig,
    config_digest,
    default_pipeline_config,
    load_pipeline_config,
)
from examsynth.evaluate import build_report, read_predictions, rows_from_manifest, write_report_json
from examsynth.ingest import (
    AdapterError,
    dataset_stats,
    filter_science,
    load_manifest,
)
from examsynth.layout import LineOverflowError, plan_layout
from examsynth.manifest import IMAGES_DIR, read_manifest, verify_dataset, write_dataset
from examsynth.records import read_records_jsonl, write_records_jsonl
from examsynth.render import RenderError, probe_figure, render_batch
from examsynth.style import sample_style

log = logging.getLogger("examsynth")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; this CLI reserves 2 for I/O faults.
    def error(self, message):
        raise UsageError(message)


def _load_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        config = load_pipeline_config(args.config)
    else:
        config = default_pipeline_config()
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(
            config, style=dataclasses.replace(config.style, global_seed=args.seed)
        )
    if getattr(args, "jobs", None) is not None:
        config = dataclasses.replace(config, jobs=args.jobs)
    if getattr(args, "output_dir", None):
        config = dataclasses.replace(config, output_dir=args.output_dir)
    return config


def cmd_ingest(args) -> int:
    if not args.config:
        raise UsageError("ingest requires --config (it lists the source manifests)")
    config = _load_config(args)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    if not config.sources:
        log.warning("config lists no sources; writing an empty records file")
    records = []
    all_skips = []
    totals = {}
    for source in config.sources:
        loaded, skips = load_manifest(source.path, source.adapter)
        log.info("%s: %d rows loaded, %d skipped", source.adapter.source_dataset, len(loaded), len(skips))
        records.extend(loaded)
        all_skips.extend(
            {"source": source.adapter.source_dataset, "row_number": n, "reason": r}
            for n, r in skips
        )
        totals[source.adapter.source_dataset] = source.total_available

    records = filter_science(records, config.subject_allowlist)
    records = [r for r in records if r.language in config.languages]

    records_path = out / "records.jsonl"
    write_records_jsonl(records, records_path)
    with (out / "skips.jsonl").open("w", encoding="utf-8") as fh:
        for skip in all_skips:
            fh.write(json.dumps(skip, ensure_ascii=False) + "\n")

    stats = dataset_stats(records, totals)
    (out / "ingest_stats.json").write_text(
        json.dumps(stats.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(stats.to_text_table())
    log.info("wrote %d records to %s (%d rows skipped)", len(records), records_path, len(all_skips))
    return EXIT_OK


def cmd_synthesize(args) -> int:
    config = _load_config(args)
    records = read_records_jsonl(args.records)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    jobs = []
    failures: list[tuple[str, str]] = []
    layouts = {}
    for record in records:
        try:
            record = probe_figure(record)
            style = sample_style(record, config.style)
            layout = plan_layout(record, style, config.canvas)
        except (RenderError, LineOverflowError, ValueError) as exc:
            failures.append((record.id, str(exc)))
            continue
        layouts[record.id] = layout
        jobs.append((record, layout, style, config.canvas))

    instances, render_failures = render_batch(jobs, out / IMAGES_DIR, parallelism=config.jobs)
    failures.extend(render_failures)
    failures.sort(key=lambda pair: pair[0])
    with (out / "failures.jsonl").open("w", encoding="utf-8") as fh:
        for record_id, error in failures:
            fh.write(json.dumps({"record_id": record_id, "error": error}) + "\n")

    if args.dump_layout:
        layout_dir = out / "layouts"
        layout_dir.mkdir(exist_ok=True)
        rendered_ids = {instance.record_id for instance in instances}
        for record_id in sorted(rendered_ids):
            (layout_dir / f"{record_id}.json").write_text(
                json.dumps(layouts[record_id].to_json_dict(), sort_keys=True, indent=2) + "\n",
                encoding="utf-8",
            )

    manifest_path = write_dataset(
        instances, records, out, config.style.global_seed, config_digest(config)
    )
    report = verify_dataset(manifest_path)
    if failures:
        log.warning("%d records failed; see failures.jsonl", len(failures))
    if not report.ok:
        for violation in report.violations:
            print(violation)
        log.error("dataset verification failed with %d violations", len(report.violations))
        return EXIT_VALIDATION
    log.info("synthesized %d images into %s", len(instances), out)
    return EXIT_OK


def cmd_stats(args) -> int:
    if not args.config:
        raise UsageError("stats requires --config (it carries the per-source totals)")
    config = _load_config(args)
    records = read_records_jsonl(args.records)
    totals = {s.adapter.source_dataset: s.total_available for s in config.sources}
    stats = dataset_stats(records, totals)
    print(stats.to_text_table())
    if args.json:
        Path(args.json).write_text(
            json.dumps(stats.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify_dataset(args.manifest)
    for violation in report.violations:
        print(violation)
    if not report.ok:
        log.error("%d violations in %d rows", len(report.violations), report.rows_checked)
        return EXIT_VALIDATION
    print(f"ok: {report.rows_checked} rows verified")
    return EXIT_OK


def cmd_eval(args) -> int:
    manifest_rows = read_manifest(args.manifest)
    predictions = read_predictions(args.predictions)
    rows, missing = rows_from_manifest(manifest_rows, predictions)
    if missing:
        log.warning("%d records have no prediction; scored as incorrect", len(missing))
    report = build_report(rows)
    print(report.to_text_table())
    if args.json:
        write_report_json(report, args.json)
    return EXIT_OK


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="examsynth", description=__doc__.split("\n", 1)[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=False, jobs=False, outdir=False):
        p.add_argument("--config", help="pipeline config file (JSON)")
        if seed:
            p.add_argument("--seed", type=int, help="override the global style seed")
        if jobs:
            p.add_argument("--jobs", type=int, help="worker count for rendering")
        if outdir:
            p.add_argument("--output-dir", help="override the config's output directory")

    p = sub.add_parser("ingest", help="normalize source manifests into canonical records")
    add_common(p, outdir=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synthesize", help="render a records file into a dataset directory")
    p.add_argument("records", help="canonical records file (JSON Lines)")
    add_common(p, seed=True, jobs=True, outdir=True)
    p.add_argument("--dump-layout", action="store_true", help="also write per-record layout JSON")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("stats", help="coverage table for a canonical records file")
    p.add_argument("records", help="canonical records file (JSON Lines)")
    add_common(p)
    p.add_argument("--json", help="also write the report to this path")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("verify", help="validate a dataset manifest end to end")
    p.add_argument("manifest", help="path to manifest.jsonl")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eval", help="score predictions against a dataset manifest")
    p.add_argument("--manifest", required=True, help="path to manifest.jsonl")
    p.add_argument("--predictions", required=True, help="JSON Lines of {record_id, model_output}")
    p.add_argument("--json", help="also write the report to this path")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, AdapterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
