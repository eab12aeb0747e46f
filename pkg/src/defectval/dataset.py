"""Multi-release defect datasets: CSV ingestion, merging and partitions."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadValue,
    EmptyInput,
    ManifestError,
    MissingColumn,
    SchemaMismatch,
    TooFewReleases,
)
from .matrix import LabeledMatrix, _frozen

# The 20 class-level metrics of the PROMISE CK datasets, in file order.
PROMISE_METRICS: tuple[str, ...] = (
    "wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm", "lcom3",
    "loc", "dam", "moa", "mfa", "cam", "ic", "cbm", "amc", "max_cc", "avg_cc",
)

_TRUE_TOKENS = {"true", "yes", "y", "t"}
_FALSE_TOKENS = {"false", "no", "n", "f"}

CANONICAL_PREFIX = ("release_id", "release_label", "unit_name")
CANONICAL_SUFFIX = ("defect_count", "defective")


@dataclass(frozen=True)
class ColumnMapping:
    """Which CSV columns hold ids, features and the defect label.

    ``feature_columns=None`` selects every column that is not an id, release or
    label column, in header order.
    """

    feature_columns: tuple[str, ...] | None = PROMISE_METRICS
    label_column: str = "bug"
    id_columns: tuple[str, ...] = ("name", "version")
    release_column: str | None = None
    label_threshold: int = 0

    def __post_init__(self) -> None:
        if self.feature_columns is not None:
            object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
            if not self.feature_columns:
                raise ValueError("at least one feature column is required")
        object.__setattr__(self, "id_columns", tuple(self.id_columns))
        reserved = set(self.id_columns) | {self.label_column}
        if self.release_column:
            reserved.add(self.release_column)
        if self.feature_columns and reserved & set(self.feature_columns):
            clash = sorted(reserved & set(self.feature_columns))
            raise ValueError(f"id/label/release columns cannot be features: {clash}")

    def to_json(self) -> dict:
        return {
            "id_columns": list(self.id_columns),
            "feature_columns": "auto" if self.feature_columns is None else list(self.feature_columns),
            "label_column": self.label_column,
            "release_column": self.release_column,
        }


PROMISE_MAPPING = ColumnMapping()


@dataclass(frozen=True)
class CodeUnit:
    unit_name: str
    features: tuple[float, ...]
    defect_count: int
    defective: bool


@dataclass(frozen=True, eq=False)
class ReleaseTable:
    """One release: a block of code units sharing a feature schema.

    Rows are stored column-wise as read-only numpy arrays; ``rows`` rebuilds
    :class:`CodeUnit` objects on demand.
    """

    release_id: int
    release_label: str
    feature_names: tuple[str, ...]
    unit_names: tuple[str, ...]
    features: np.ndarray
    defect_counts: np.ndarray
    defective: np.ndarray

    def __post_init__(self) -> None:
        if self.release_id < 1:
            raise ValueError("release_id must be >= 1")
        features = np.asarray(self.features, dtype=float).reshape(len(self.unit_names), len(self.feature_names))
        counts = np.asarray(self.defect_counts, dtype=np.int64)
        defective = np.asarray(self.defective, dtype=bool)
        if counts.shape != (len(self.unit_names),) or defective.shape != counts.shape:
            raise ValueError("column lengths differ")
        if not np.isfinite(features).all():
            raise BadValue("feature values must be finite")
        if (counts < 0).any():
            raise BadValue("defect counts must be non-negative")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "unit_names", tuple(self.unit_names))
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "defect_counts", _frozen(counts))
        object.__setattr__(self, "defective", _frozen(defective))

    def __len__(self) -> int:
        return len(self.unit_names)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReleaseTable):
            return NotImplemented
        return (
            self.release_id == other.release_id
            and self.release_label == other.release_label
            and self.feature_names == other.feature_names
            and self.unit_names == other.unit_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.defect_counts, other.defect_counts)
            and np.array_equal(self.defective, other.defective)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def rows(self) -> tuple[CodeUnit, ...]:
        return tuple(
            CodeUnit(name, tuple(map(float, feats)), int(count), bool(flag))
            for name, feats, count, flag in zip(
                self.unit_names, self.features, self.defect_counts, self.defective
            )
        )

    @property
    def n_defective(self) -> int:
        return int(self.defective.sum())

    def with_release_id(self, release_id: int) -> ReleaseTable:
        return ReleaseTable(
            release_id, self.release_label, self.feature_names, self.unit_names,
            self.features, self.defect_counts, self.defective,
        )

    def to_matrix(self) -> LabeledMatrix:
        return LabeledMatrix(
            self.features,
            self.defective,
            np.full(len(self), self.release_id, dtype=np.int64),
            self.unit_names,
        )


@dataclass(frozen=True, eq=False)
class ProjectDataset:
    project_name: str
    releases: tuple[ReleaseTable, ...]
    feature_names: tuple[str, ...] = field(init=False)
    epv: float = field(init=False)

    def __post_init__(self) -> None:
        releases = tuple(self.releases)
        if not releases:
            raise EmptyInput("a project needs at least one release")
        names = releases[0].feature_names
        for expected, table in enumerate(releases, start=1):
            if table.release_id != expected:
                raise ValueError("releases must be numbered 1..n in order")
            if table.feature_names != names:
                raise SchemaMismatch(
                    f"release {table.release_label!r} has a different feature list"
                )
        object.__setattr__(self, "releases", releases)
        object.__setattr__(self, "feature_names", names)
        defective = sum(t.n_defective for t in releases)
        object.__setattr__(self, "epv", defective / len(names))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProjectDataset):
            return NotImplemented
        return self.project_name == other.project_name and self.releases == other.releases

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_releases(self) -> int:
        return len(self.releases)

    @property
    def n_observations(self) -> int:
        return sum(len(t) for t in self.releases)

    @property
    def n_defective(self) -> int:
        return sum(t.n_defective for t in self.releases)

    def to_matrix(self) -> LabeledMatrix:
        """Stack all releases in order; row ``i`` of the result is plan row ``i``."""
        return LabeledMatrix(
            np.vstack([t.features for t in self.releases]),
            np.concatenate([t.defective for t in self.releases]),
            np.concatenate([np.full(len(t), t.release_id, dtype=np.int64) for t in self.releases]),
            tuple(name for t in self.releases for name in t.unit_names),
        )


# --------------------------------------------------------------------------
# parsing


def _parse_label(token: str, line: int, column: str) -> int:
    text = token.strip()
    lowered = text.lower()
    if lowered in _TRUE_TOKENS:
        return 1
    if lowered in _FALSE_TOKENS:
        return 0
    try:
        value = float(text)
    except ValueError:
        raise BadValue(f"label {text!r} is not a count or boolean", line=line, column=column) from None
    if not math.isfinite(value) or value < 0 or value != int(value):
        raise BadValue(f"label {text!r} is not a non-negative integer", line=line, column=column)
    return int(value)


def _column_index(header: list[str], name: str) -> list[int]:
    return [i for i, h in enumerate(header) if h == name]


def parse_release_csv(
    raw: bytes,
    mapping: ColumnMapping = PROMISE_MAPPING,
    *,
    release_id: int = 1,
    release_label: str = "",
    impute: str | None = None,
) -> ReleaseTable:
    """Parse one release CSV into a :class:`ReleaseTable`.

    Missing or non-finite feature cells raise :class:`BadValue` unless
    ``impute="median"``, which fills them with the release's column median.
    Columns not named by ``mapping`` are ignored. When a header name repeats
    (PROMISE files carry two ``name`` columns) every occurrence of an id
    column contributes to the unit name.
    """
    if impute not in (None, "median"):
        raise ValueError(f"unknown impute policy {impute!r}")
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise BadValue(f"input is not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyInput("CSV has no header row") from None

    label_idx = _column_index(header, mapping.label_column)
    if not label_idx:
        raise MissingColumn(f"label column {mapping.label_column!r} not in header")
    id_idx: list[int] = []
    for name in mapping.id_columns:
        found = _column_index(header, name)
        if not found:
            raise MissingColumn(f"id column {name!r} not in header")
        id_idx.extend(found)
    id_idx = sorted(set(id_idx))
    reserved = set(mapping.id_columns) | {mapping.label_column}
    if mapping.release_column:
        if not _column_index(header, mapping.release_column):
            raise MissingColumn(f"release column {mapping.release_column!r} not in header")
        reserved.add(mapping.release_column)

    if mapping.feature_columns is None:
        feature_names = tuple(h for h in header if h not in reserved)
        if not feature_names:
            raise MissingColumn("no feature columns left after removing id/label columns")
    else:
        feature_names = mapping.feature_columns
    feature_idx = []
    for name in feature_names:
        found = _column_index(header, name)
        if not found:
            raise MissingColumn(f"feature column {name!r} not in header")
        if len(found) > 1:
            raise SchemaMismatch(f"feature column {name!r} appears {len(found)} times")
        feature_idx.append(found[0])

    units: list[str] = []
    rows: list[list[float]] = []
    counts: list[int] = []
    for record in reader:
        line = reader.line_num
        if not record or all(not cell.strip() for cell in record):
            continue
        if len(record) != len(header):
            raise BadValue(f"expected {len(header)} cells, found {len(record)}", line=line)
        values = []
        for name, idx in zip(feature_names, feature_idx):
            cell = record[idx].strip()
            try:
                value = float(cell) if cell else math.nan
            except ValueError:
                raise BadValue(f"feature {name!r} value {cell!r} is not numeric", line=line, column=name) from None
            # NaN survives only when it will be imputed below
            if not math.isfinite(value) and (impute is None or math.isinf(value)):
                raise BadValue(f"feature {name!r} value {cell!r} is missing or not finite", line=line, column=name)
            values.append(value)
        if id_idx:
            units.append(":".join(record[i].strip() for i in id_idx))
        else:
            units.append(f"row{len(units) + 1}")
        rows.append(values)
        counts.append(_parse_label(record[label_idx[0]], line, mapping.label_column))

    if not rows:
        raise EmptyInput("CSV has no data rows")
    features = np.array(rows, dtype=float)
    if impute == "median":
        for j, name in enumerate(feature_names):
            column = features[:, j]
            missing = np.isnan(column)
            if missing.any():
                if missing.all():
                    raise BadValue(f"feature {name!r} has no values to impute from", column=name)
                column[missing] = np.median(column[~missing])
    count_array = np.array(counts, dtype=np.int64)
    return ReleaseTable(
        release_id=release_id,
        release_label=release_label,
        feature_names=feature_names,
        unit_names=tuple(units),
        features=features,
        defect_counts=count_array,
        defective=count_array > mapping.label_threshold,
    )


def merge_releases(tables: Sequence[ReleaseTable], project_name: str) -> ProjectDataset:
    """Number ``tables`` 1..n in the given order and bundle them as one project."""
    if not tables:
        raise EmptyInput("no release tables to merge")
    names = tables[0].feature_names
    for table in tables[1:]:
        if table.feature_names != names:
            raise SchemaMismatch(
                f"release {table.release_label!r} features differ from {tables[0].release_label!r}"
            )
    return ProjectDataset(
        project_name,
        tuple(t.with_release_id(i) for i, t in enumerate(tables, start=1)),
    )


def eligible_for_experiment(dataset: ProjectDataset) -> bool:
    return dataset.n_releases >= 3


def _subset(dataset: ProjectDataset, releases: Iterable[ReleaseTable]) -> ProjectDataset:
    return ProjectDataset(dataset.project_name, tuple(releases))


def split_last_release(dataset: ProjectDataset) -> tuple[ProjectDataset, ReleaseTable]:
    """Part A = releases 1..n-1, part B = release n."""
    if dataset.n_releases < 2:
        raise TooFewReleases(f"{dataset.project_name}: need >= 2 releases, have {dataset.n_releases}")
    return _subset(dataset, dataset.releases[:-1]), dataset.releases[-1]


def split_halves(dataset: ProjectDataset) -> tuple[tuple[ReleaseTable, ...], tuple[ReleaseTable, ...]]:
    """Tag releases as first/second half: release m is second iff m > ceil(n/2)."""
    n = dataset.n_releases
    if n < 2:
        raise TooFewReleases(f"{dataset.project_name}: need >= 2 releases, have {n}")
    cut = math.ceil(n / 2)
    return dataset.releases[:cut], dataset.releases[cut:]


def defect_rate(tables: Iterable[ReleaseTable]) -> tuple[int, int, float]:
    """(defective, total, defective/total) over a group of releases."""
    tables = list(tables)
    defective = sum(t.n_defective for t in tables)
    total = sum(len(t) for t in tables)
    return defective, total, defective / total if total else math.nan


def epv_group(datasets: Sequence[ProjectDataset]) -> dict[str, str]:
    """Median split by EPV; the lower ceil(n/2) datasets are ``Low``."""
    if len(datasets) < 2:
        raise ValueError("EPV grouping needs at least two datasets")
    ordered = sorted(datasets, key=lambda d: (d.epv, d.project_name))
    n_low = math.ceil(len(ordered) / 2)
    return {d.project_name: ("Low" if i < n_low else "High") for i, d in enumerate(ordered)}


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


# --------------------------------------------------------------------------
# canonical CSV (one file per project)


def write_canonical_csv(dataset: ProjectDataset) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([*CANONICAL_PREFIX, *dataset.feature_names, *CANONICAL_SUFFIX])
    for table in dataset.releases:
        for name, feats, count, flag in zip(
            table.unit_names, table.features, table.defect_counts, table.defective
        ):
            writer.writerow(
                [table.release_id, table.release_label, name, *(repr(float(v)) for v in feats),
                 int(count), int(flag)]
            )
    return buffer.getvalue()


def read_canonical_csv(raw: bytes, project_name: str) -> ProjectDataset:
    reader = csv.reader(io.StringIO(raw.decode("utf-8"), newline=""))
    header = next(reader)
    if tuple(header[:3]) != CANONICAL_PREFIX or tuple(header[-2:]) != CANONICAL_SUFFIX:
        raise MissingColumn("not a canonical dataset file")
    feature_names = tuple(header[3:-2])
    blocks: dict[int, dict] = {}
    for record in reader:
        if not record:
            continue
        rid = int(record[0])
        block = blocks.setdefault(rid, {"label": record[1], "units": [], "x": [], "n": [], "d": []})
        block["units"].append(record[2])
        block["x"].append([float(v) for v in record[3:-2]])
        block["n"].append(int(record[-2]))
        block["d"].append(record[-1] == "1")
    if sorted(blocks) != list(range(1, len(blocks) + 1)):
        raise BadValue("release ids are not 1..n")
    tables = [
        ReleaseTable(rid, b["label"], feature_names, tuple(b["units"]),
                     np.array(b["x"], dtype=float).reshape(len(b["units"]), len(feature_names)),
                     np.array(b["n"], dtype=np.int64), np.array(b["d"], dtype=bool))
        for rid, b in sorted(blocks.items())
    ]
    return ProjectDataset(project_name, tuple(tables))


# --------------------------------------------------------------------------
# manifests

_MANIFEST_KEYS = {"project", "releases", "columns", "label_threshold", "impute"}
_COLUMN_KEYS = {"id_columns", "feature_columns", "label_column", "release_column"}


@dataclass(frozen=True)
class DatasetManifest:
    project_name: str
    releases: tuple[tuple[str, Path], ...]
    mapping: ColumnMapping = PROMISE_MAPPING
    impute: str | None = None
    source: Path | None = None

    def __post_init__(self) -> None:
        paths = [p for _, p in self.releases]
        if len(set(paths)) != len(paths):
            raise ManifestError(f"{self.project_name}: release file paths must be distinct")


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read a manifest JSON file; relative release paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    unknown = set(doc) - _MANIFEST_KEYS
    if unknown:
        raise ManifestError(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("project", "releases"):
        if key not in doc:
            raise ManifestError(f"{path}: missing {key!r}")
    releases = doc["releases"]
    if not isinstance(releases, list) or not releases:
        raise ManifestError(f"{path}: 'releases' must be a non-empty list")
    resolved = []
    for entry in releases:
        if not isinstance(entry, dict) or set(entry) != {"label", "path"}:
            raise ManifestError(f"{path}: each release needs exactly 'label' and 'path'")
        resolved.append((str(entry["label"]), (path.parent / entry["path"]).resolve()))

    columns = doc.get("columns")
    if columns is None:
        mapping = ColumnMapping(label_threshold=int(doc.get("label_threshold", 0)))
    else:
        unknown = set(columns) - _COLUMN_KEYS
        if unknown:
            raise ManifestError(f"{path}: unknown column keys {sorted(unknown)}")
        features = columns.get("feature_columns", list(PROMISE_METRICS))
        try:
            mapping = ColumnMapping(
                feature_columns=None if features == "auto" else tuple(features),
                label_column=columns.get("label_column", "bug"),
                id_columns=tuple(columns.get("id_columns", ("name", "version"))),
                release_column=columns.get("release_column"),
                label_threshold=int(doc.get("label_threshold", 0)),
            )
        except ValueError as exc:
            raise ManifestError(f"{path}: {exc}") from None
    return DatasetManifest(str(doc["project"]), tuple(resolved), mapping, doc.get("impute"), path)


def load_dataset(manifest: DatasetManifest) -> ProjectDataset:
    """Parse and merge every release named by ``manifest``.

    Parse errors are re-raised with the offending file path prepended.
    """
    tables = []
    for position, (label, file_path) in enumerate(manifest.releases, start=1):
        try:
            raw = Path(file_path).read_bytes()
        except OSError as exc:
            raise ManifestError(f"{file_path}: {exc.strerror or exc}") from None
        try:
            tables.append(
                parse_release_csv(raw, manifest.mapping, release_id=position,
                                  release_label=label, impute=manifest.impute)
            )
        except (BadValue, MissingColumn, SchemaMismatch, EmptyInput) as exc:
            raise type(exc)(f"{file_path}: {exc}") from None
    return merge_releases(tables, manifest.project_name)
