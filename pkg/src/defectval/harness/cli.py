"""``defectval`` command line: ingest, sanity-check, run, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..dataset import load_dataset, load_manifest, write_canonical_csv
from ..errors import DefectValError
from . import load_config, run_experiment, write_outputs
from .config import parse_formats
from .render import dumps_json, render, sanity_markdown, table_csv, SANITY_COLUMNS
from .summaries import dataset_summary, drift_row, format_summary

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _ingest(args) -> int:
    dataset = load_dataset(load_manifest(args.manifest))
    summary = dataset_summary(dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{dataset.project_name}.csv").write_text(write_canonical_csv(dataset), encoding="utf-8")
    (out / f"{dataset.project_name}.summary.json").write_text(dumps_json(summary), encoding="utf-8")
    print(format_summary(summary))
    return EXIT_OK


def _sanity_check(args) -> int:
    manifests = list(args.manifests)
    if args.config:
        manifests += [str(p) for p in load_config(args.config).datasets]
    if not manifests:
        print("sanity-check: give manifest paths or --config", file=sys.stderr)
        return EXIT_USAGE
    rows, failures = [], []
    for path in manifests:
        try:
            rows.append(drift_row(load_dataset(load_manifest(path))))
        except DefectValError as exc:
            failures.append(f"{path}: {type(exc).__name__}: {exc}")
    print("\n".join(sanity_markdown(rows)))
    for failure in failures:
        print(f"failed: {failure}", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        formats = parse_formats(args.format) if args.format else ("csv", "json")
        if "csv" in formats:
            (out / "sanity.csv").write_text(table_csv(rows, SANITY_COLUMNS), encoding="utf-8")
        if "json" in formats:
            (out / "sanity.json").write_text(dumps_json({"rows": rows, "failures": failures}), encoding="utf-8")
        if "markdown" in formats:
            (out / "sanity.md").write_text("\n".join(sanity_markdown(rows)) + "\n", encoding="utf-8")
    return EXIT_OK if rows else EXIT_FAILED


def _run(args) -> int:
    config = load_config(args.config).with_overrides(
        seed=args.seed, workers=args.workers, output_dir=args.out, formats=args.format
    )

    def progress(outcome, done, total):
        if not args.quiet:
            status = "ok" if outcome.values is not None else outcome.reason
            print(f"[{done}/{total}] {outcome.cell.key} {status} {outcome.seconds:.1f}s", file=sys.stderr)

    report, runtime = run_experiment(config, progress)
    for path in write_outputs(report, runtime, config):
        print(path)
    if report["status"]["fatal"]:
        for message in report["status"]["messages"]:
            print(f"fatal: {message}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def _report(args) -> int:
    report_path = Path(args.report)
    try:
        report = json.loads(report_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"report: cannot read {report_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    formats = parse_formats(args.format or "csv,markdown,svg")
    for path in render(report, formats, args.out or report_path.parent):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="defectval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a dataset manifest and print its summary")
    p.add_argument("manifest")
    p.add_argument("--out", default=".", help="directory for the canonical CSV and summary JSON")
    p.set_defaults(handler=_ingest)

    p = sub.add_parser("sanity-check", help="defect-rate drift between first and second half")
    p.add_argument("manifests", nargs="*")
    p.add_argument("--config", help="take the dataset list from a run config")
    p.add_argument("--out")
    p.add_argument("--format", help="comma-separated subset of csv,json,markdown")
    p.set_defaults(handler=_sanity_check)

    p = sub.add_parser("run", help="run the full meta-validation experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--format", help="comma-separated subset of csv,json,markdown,svg")
    p.add_argument("--quiet", action="store_true", help="no per-cell progress on stderr")
    p.set_defaults(handler=_run)

    p = sub.add_parser("report", help="render tables and figures from a report.json")
    p.add_argument("report")
    p.add_argument("--format", help="comma-separated subset of csv,json,markdown,svg")
    p.add_argument("--out", help="output directory (default: next to the report)")
    p.set_defaults(handler=_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except DefectValError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
