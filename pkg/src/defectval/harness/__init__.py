"""Experiment orchestration, reports and the command-line interface."""

from __future__ import annotations

import time
from datetime import datetime, timezone
from pathlib import Path

from ..dataset import ProjectDataset, load_dataset, load_manifest
from ..errors import ConfigError
from .config import RunConfig, load_config
from .render import dumps_json, render
from .runner import assemble_report, plan_cells, prepare_datasets, run_cells

__all__ = ["RunConfig", "load_config", "load_datasets", "run_experiment", "write_outputs", "render"]


def load_datasets(manifest_paths) -> dict[str, ProjectDataset]:
    datasets: dict[str, ProjectDataset] = {}
    for path in manifest_paths:
        dataset = load_dataset(load_manifest(path))
        if dataset.project_name in datasets:
            raise ConfigError(f"dataset {dataset.project_name!r} is listed twice")
        datasets[dataset.project_name] = dataset
    return datasets


def run_experiment(config: RunConfig, progress=None) -> tuple[dict, dict]:
    """Run every cell of ``config``; returns (report, runtime metadata).

    The report is a deterministic function of the config, data and seed.
    Wall-clock data lives only in the runtime metadata.
    """
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    clock = time.perf_counter()
    eligible, excluded = prepare_datasets(load_datasets(config.datasets))
    outcomes = run_cells(plan_cells(eligible, config), eligible, config, progress)
    report = assemble_report(config, eligible, outcomes, excluded)
    runtime = {
        "started_utc": started,
        "total_seconds": time.perf_counter() - clock,
        "workers": config.workers,
        "cell_seconds": {o.cell.key: o.seconds for o in outcomes},
    }
    return report, runtime


def write_outputs(report: dict, runtime: dict, config: RunConfig) -> list[Path]:
    formats = set(config.formats) | {"json"}
    written = render(report, sorted(formats), config.output_dir)
    path = Path(config.output_dir) / "runtime.json"
    path.write_text(dumps_json(runtime), encoding="utf-8")
    return [*written, path]
