"""Run configuration: a JSON file naming datasets, roster, techniques and seed.

Schema (unknown keys are rejected at every level)::

    {
      "datasets": ["manifests/ant.json", ...],     # required, relative to this file
      "roster": "default" | [{"kind": "IBk", "name": "IBk", "parameters": {"k": 3}}, ...],
      "techniques": "default" | [{"kind": "WalkForward"},
                                 {"kind": "RepeatedKFold", "folds": 10, "repeats": 10},
                                 {"kind": "OutOfSampleBootstrap", "bootstrap_iterations": 100}],
      "seed": 20240101,                            # required
      "cell_budget_seconds": 1800,
      "output_dir": "out",                         # relative to this file
      "formats": ["csv", "json", "markdown", "svg"],
      "workers": 1
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from ..classifiers import ClassifierSpec, default_roster, spec_from_json
from ..errors import ConfigError, DefectValError, UnknownFormat
from ..validation import BOOTSTRAP, REPEATED_KFOLD, WALK_FORWARD, TechniqueConfig

FORMATS = ("csv", "json", "markdown", "svg")
DEFAULT_BUDGET_SECONDS = 1800.0

_KEYS = {"datasets", "roster", "techniques", "seed", "cell_budget_seconds",
         "output_dir", "formats", "workers"}
_TECHNIQUE_KEYS = {"kind", "id", "folds", "repeats", "stratified",
                   "bootstrap_iterations", "optimism_reduced"}


def default_techniques() -> tuple[TechniqueConfig, ...]:
    return (TechniqueConfig(WALK_FORWARD), TechniqueConfig(REPEATED_KFOLD), TechniqueConfig(BOOTSTRAP))


def technique_from_json(doc: dict) -> TechniqueConfig:
    if not isinstance(doc, dict):
        raise ConfigError("each technique must be a JSON object")
    unknown = set(doc) - _TECHNIQUE_KEYS
    if unknown:
        raise ConfigError(f"unknown technique keys {sorted(unknown)}")
    if "kind" not in doc:
        raise ConfigError("technique entry needs a 'kind'")
    return TechniqueConfig(**doc)


def parse_formats(value) -> tuple[str, ...]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v]
    formats = tuple(value)
    for fmt in formats:
        if fmt not in FORMATS:
            raise UnknownFormat(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    return formats


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[Path, ...]
    roster: tuple[ClassifierSpec, ...]
    techniques: tuple[TechniqueConfig, ...]
    seed: int
    cell_budget_seconds: float = DEFAULT_BUDGET_SECONDS
    output_dir: Path = Path("out")
    formats: tuple[str, ...] = FORMATS
    workers: int = 1
    # dataset entries exactly as written, echoed into reports
    dataset_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        if not self.roster:
            raise ConfigError("at least one classifier is required")
        if not self.techniques:
            raise ConfigError("at least one technique is required")
        names = [s.name for s in self.roster]
        if len(set(names)) != len(names):
            raise ConfigError("classifier names must be unique")
        ids = [t.id for t in self.techniques]
        if len(set(ids)) != len(ids):
            raise ConfigError("technique ids must be unique")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.cell_budget_seconds <= 0:
            raise ConfigError("cell_budget_seconds must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        parse_formats(self.formats)
        if not self.dataset_labels:
            object.__setattr__(self, "dataset_labels", tuple(str(p) for p in self.datasets))

    def with_overrides(self, *, seed: int | None = None, workers: int | None = None,
                       output_dir: Path | None = None, formats=None) -> RunConfig:
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if workers is not None:
            changes["workers"] = workers
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        if formats is not None:
            changes["formats"] = parse_formats(formats)
        return replace(self, **changes)

    def to_json(self) -> dict:
        """Everything that determines the results; workers and paths are left out."""
        return {
            "datasets": list(self.dataset_labels),
            "roster": [s.to_json() for s in self.roster],
            "techniques": [t.to_json() for t in self.techniques],
            "seed": self.seed,
            "cell_budget_seconds": self.cell_budget_seconds,
        }


def config_from_json(doc: dict, base_dir: Path = Path(".")) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "seed" not in doc:
        raise ConfigError("config must set 'seed'")
    datasets = doc.get("datasets")
    if not isinstance(datasets, list) or not datasets:
        raise ConfigError("'datasets' must be a non-empty list of manifest paths")
    roster_doc = doc.get("roster", "default")
    techniques_doc = doc.get("techniques", "default")
    try:
        if roster_doc == "default":
            roster = tuple(default_roster())
        elif isinstance(roster_doc, list):
            roster = tuple(spec_from_json(entry) for entry in roster_doc)
        else:
            raise ConfigError("'roster' must be \"default\" or a list of classifiers")
        if techniques_doc == "default":
            techniques = default_techniques()
        elif isinstance(techniques_doc, list):
            techniques = tuple(technique_from_json(entry) for entry in techniques_doc)
        else:
            raise ConfigError("'techniques' must be \"default\" or a list")
        return RunConfig(
            datasets=tuple((base_dir / p).resolve() for p in datasets),
            roster=roster,
            techniques=techniques,
            seed=doc["seed"],
            cell_budget_seconds=float(doc.get("cell_budget_seconds", DEFAULT_BUDGET_SECONDS)),
            output_dir=(base_dir / doc.get("output_dir", "out")).resolve(),
            formats=parse_formats(doc.get("formats", list(FORMATS))),
            workers=int(doc.get("workers", 1)),
            dataset_labels=tuple(str(p) for p in datasets),
        )
    except ConfigError:
        raise
    except (DefectValError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_json(doc, path.parent)
