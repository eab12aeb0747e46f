"""Validation techniques as train/test split plans, and AUC estimation over a plan.

Row indices in a plan refer to the stacked matrix of the data it was built
for (``ProjectDataset.to_matrix()`` order: release 1 rows first).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ClassifierSpec, score_many, train
from .dataset import ProjectDataset
from .errors import (
    AllRunsSkipped,
    BudgetExceeded,
    ConfigError,
    ExhaustedRetries,
    SingleClass,
    TooFewReleases,
    TooFewRows,
)
from .matrix import LabeledMatrix
from .metrics import auc
from .rng import derive_seed, generator

WALK_FORWARD = "WalkForward"
REPEATED_KFOLD = "RepeatedKFold"
BOOTSTRAP = "OutOfSampleBootstrap"
TECHNIQUE_KINDS = (WALK_FORWARD, REPEATED_KFOLD, BOOTSTRAP)

# regeneration attempts per bootstrap run before giving up
BOOTSTRAP_RETRIES = 10



@dataclass(frozen=True)
class TechniqueConfig:
    kind: str
    id: str = ""
    folds: int = 10
    repeats: int = 10
    stratified: bool = False
    bootstrap_iterations: int = 100
    optimism_reduced: bool = False

    def __post_init__(self) -> None:
        if self.kind not in TECHNIQUE_KINDS:
            raise ConfigError(f"unknown technique kind {self.kind!r}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.bootstrap_iterations < 1:
            raise ConfigError("bootstrap_iterations must be >= 1")
        if self.optimism_reduced and self.kind != BOOTSTRAP:
            raise ConfigError("optimism_reduced only applies to the bootstrap technique")
        if not self.id:
            object.__setattr__(self, "id", self._default_id())

    def _default_id(self) -> str:
        if self.kind == WALK_FORWARD:
            return "walk-forward"
        if self.kind == REPEATED_KFOLD:
            return f"{self.repeats}x{self.folds}-fold" + ("-stratified" if self.stratified else "")
        return "optimism-bootstrap" if self.optimism_reduced else "bootstrap"

    def to_json(self) -> dict:
        doc = {"id": self.id, "kind": self.kind}
        if self.kind == REPEATED_KFOLD:
            doc.update(folds=self.folds, repeats=self.repeats, stratified=self.stratified)
        elif self.kind == BOOTSTRAP:
            doc.update(bootstrap_iterations=self.bootstrap_iterations,
                       optimism_reduced=self.optimism_reduced)
        return doc


@dataclass(frozen=True, eq=False)
class Run:
    """One train/test pair. ``train`` may repeat rows (bootstrap multiset)."""

    train: np.ndarray
    test: np.ndarray
    repeat: int = 0
    index: int = 0

    def __post_init__(self) -> None:
        train_rows = np.asarray(self.train, dtype=np.int64)
        test_rows = np.asarray(self.test, dtype=np.int64)
        if train_rows.size == 0 or test_rows.size == 0:
            raise ValueError("train and test sets must be non-empty")
        if np.intersect1d(train_rows, test_rows).size:
            raise ValueError("train and test rows overlap")
        train_rows.setflags(write=False)
        test_rows.setflags(write=False)
        object.__setattr__(self, "train", train_rows)
        object.__setattr__(self, "test", test_rows)


@dataclass(frozen=True, eq=False)
class SplitPlan:
    technique: str
    runs: tuple[Run, ...]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.runs)

    def to_json(self) -> dict:
        return {
            "technique": self.technique,
            "provenance": self.provenance,
            "runs": [
                {"repeat": r.repeat, "run": r.index,
                 "train": r.train.tolist(), "test": r.test.tolist()}
                for r in self.runs
            ],
        }


def walk_forward_plan(part_a: ProjectDataset) -> SplitPlan:
    """Run i trains on releases 1..i and tests on release i+1."""
    if part_a.n_releases < 2:
        raise TooFewReleases("walk-forward needs at least two releases")
    bounds = np.cumsum([0] + [len(t) for t in part_a.releases])
    runs = tuple(
        Run(np.arange(0, bounds[i]), np.arange(bounds[i], bounds[i + 1]), 0, i - 1)
        for i in range(1, part_a.n_releases)
    )
    return SplitPlan(WALK_FORWARD, runs, {"releases": part_a.n_releases})


def kfold_plan(labels, folds: int = 10, repeats: int = 10, stratified: bool = False,
               seed: int = 0) -> SplitPlan:
    """``repeats`` independent shuffles, each cut into ``folds`` test folds.

    Unstratified folds are consecutive slices of a seeded permutation (sizes
    floor(N/k) or ceil(N/k)). Stratified folds deal the shuffled defective
    rows, then the shuffled clean rows, round-robin over the folds.
    """
    labels = np.asarray(labels, dtype=bool)
    n = labels.size
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n < folds:
        raise TooFewRows(f"{n} rows cannot fill {folds} folds")
    rng = generator(seed)
    all_rows = np.arange(n)
    runs = []
    for r in range(repeats):
        if stratified:
            pos = rng.permutation(np.flatnonzero(labels))
            neg = rng.permutation(np.flatnonzero(~labels))
            dealt = np.concatenate([pos, neg])
            assignment = np.empty(n, dtype=np.int64)
            assignment[dealt] = np.arange(n) % folds
            test_sets = [np.sort(np.flatnonzero(assignment == j)) for j in range(folds)]
        else:
            test_sets = [np.sort(part) for part in np.array_split(rng.permutation(n), folds)]
        for j, test in enumerate(test_sets):
            mask = np.ones(n, dtype=bool)
            mask[test] = False
            runs.append(Run(all_rows[mask], test, r, j))
    return SplitPlan(
        REPEATED_KFOLD, tuple(runs),
        {"seed": seed, "folds": folds, "repeats": repeats, "stratified": stratified},
    )


def out_of_sample(draws, n: int) -> np.ndarray:
    """Rows of ``range(n)`` never drawn."""
    drawn = np.zeros(n, dtype=bool)
    drawn[np.asarray(draws, dtype=np.int64)] = True
    return np.flatnonzero(~drawn)


def bootstrap_plan(labels, iterations: int = 100, seed: int = 0) -> SplitPlan:
    """Train on N draws with replacement, test on the rows never drawn.

    A draw whose held-out rows are empty or single-class is redrawn from the
    same stream, at most ``BOOTSTRAP_RETRIES`` times per run.
    """
    labels = np.asarray(labels, dtype=bool)
    n = labels.size
    if n < 2:
        raise TooFewRows("bootstrap needs at least two rows")
    rng = generator(seed)
    runs = []
    for i in range(iterations):
        for _ in range(BOOTSTRAP_RETRIES):
            draws = rng.integers(0, n, size=n)
            test = out_of_sample(draws, n)
            if test.size and labels[test].any() and not labels[test].all():
                break
        else:
            raise ExhaustedRetries(
                f"run {i}: no usable out-of-sample set after {BOOTSTRAP_RETRIES} draws"
            )
        runs.append(Run(draws, test, 0, i))
    return SplitPlan(BOOTSTRAP, tuple(runs), {"seed": seed, "iterations": iterations})


def plan_for(config: TechniqueConfig, part_a: ProjectDataset, seed: int) -> SplitPlan:
    if config.kind == WALK_FORWARD:
        return walk_forward_plan(part_a)
    labels = part_a.to_matrix().labels
    if config.kind == REPEATED_KFOLD:
        return kfold_plan(labels, config.folds, config.repeats, config.stratified, seed)
    return bootstrap_plan(labels, config.bootstrap_iterations, seed)


@dataclass(frozen=True)
class EstimatedAccuracy:
    auc: float
    run_aucs: tuple[float | None, ...]
    skipped: int

    @property
    def evaluated(self) -> int:
        return len(self.run_aucs) - self.skipped


def _check_deadline(deadline: float | None) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise BudgetExceeded("cell exceeded its wall-clock budget")


def estimate_auc(plan: SplitPlan, spec: ClassifierSpec, data: LabeledMatrix, seed: int, *,
                 optimism_reduced: bool = False, deadline: float | None = None) -> EstimatedAccuracy:
    """Unweighted mean AUC over the plan's runs.

    Run ``(repeat, index)`` trains with seed ``derive_seed(seed, repeat, index)``.
    Runs whose test rows are single-class are skipped and counted.

    With ``optimism_reduced`` each run instead contributes
    ``apparent - (AUC on its own training draw - AUC on all rows)``, where
    ``apparent`` is the AUC of a model trained and tested on all rows.
    """
    apparent = None
    if optimism_reduced:
        full = train(spec, data, derive_seed(seed, "apparent"))
        apparent = auc(score_many(full, data.features), data.labels)
    values: list[float | None] = []
    for run in plan.runs:
        _check_deadline(deadline)
        model = train(spec, data.take(run.train), derive_seed(seed, run.repeat, run.index))
        try:
            if apparent is None:
                test = data.take(run.test)
                values.append(auc(score_many(model, test.features), test.labels))
            else:
                train_rows = data.take(run.train)
                on_train = auc(score_many(model, train_rows.features), train_rows.labels)
                on_all = auc(score_many(model, data.features), data.labels)
                values.append(apparent - (on_train - on_all))
        except SingleClass:
            values.append(None)
    computed = [v for v in values if v is not None]
    if not computed:
        raise AllRunsSkipped(f"no run of {plan.technique} had a computable AUC")
    return EstimatedAccuracy(float(np.mean(computed)), tuple(values), len(values) - len(computed))
