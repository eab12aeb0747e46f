"""Meta-validation: how good is the classifier a technique recommends?

Each dataset is cut into part A (all releases but the last) and part B (the
last release). A technique estimates every classifier's AUC using A alone and
recommends the argmax; the recommendation is then judged by its actual AUC
when trained on all of A and tested on B.

Seeds. Given a master seed, everything about dataset ``d`` derives from
``dataset_seed = derive_seed(master, d)``:

* split plan of technique ``t``: ``derive_seed(dataset_seed, t, "plan")``
* estimate of classifier ``c`` under ``t``: ``derive_seed(dataset_seed, t, c)``
* A-to-B training of ``c``: ``derive_seed(dataset_seed, "actual", c)``

The A-to-B seed does not depend on the technique, so a selected classifier's
technique AUC is exactly the value the baselines see for it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .classifiers import ClassifierSpec, score_many, train
from .dataset import ProjectDataset, ReleaseTable, epv_group, split_last_release
from .errors import AllExcluded, DefectValError, SingleClassTestRelease, TooFewReleases
from .metrics import DEFAULT_THRESHOLD, auc, confusion, precision_recall_mcc
from .rng import derive_seed
from .validation import TechniqueConfig, estimate_auc, plan_for

Estimator = Callable[[ClassifierSpec], float]


def dataset_seed(master: int, dataset_name: str) -> int:
    return derive_seed(master, dataset_name)


def plan_seed(seed: int, technique: TechniqueConfig) -> int:
    return derive_seed(seed, technique.id, "plan")


def estimate_seed(seed: int, technique: TechniqueConfig, spec: ClassifierSpec) -> int:
    return derive_seed(seed, technique.id, spec.name)


def actual_seed(seed: int, spec: ClassifierSpec) -> int:
    return derive_seed(seed, "actual", spec.name)


@dataclass(frozen=True)
class SelectionResult:
    technique: str
    estimates: dict[str, float]
    selected: str
    selected_estimate: float
    excluded: dict[str, str]


@dataclass(frozen=True)
class TechniqueEvaluation:
    dataset: str
    technique: str
    selected: str
    estimated_auc: float
    actual_auc: float
    bias: float
    absolute_bias: float

    @classmethod
    def from_values(cls, dataset: str, technique: str, selected: str,
                    estimated: float, actual: float) -> TechniqueEvaluation:
        bias = estimated - actual
        return cls(dataset, technique, selected, estimated, actual, bias, abs(bias))


@dataclass(frozen=True)
class BaselineTriple:
    best_auc: float
    medium_auc: float
    worst_auc: float
    best: str
    medium: str
    worst: str


@dataclass(frozen=True)
class BSideResult:
    auc: float
    precision: float
    recall: float
    mcc: float


def pick_highest(estimates: dict[str, float]) -> str:
    """Name with the highest estimate; ties go to the alphabetically first name."""
    if not estimates:
        raise AllExcluded("no classifier has a computable estimate")
    return min(estimates, key=lambda name: (-estimates[name], name))


def b_side_result(spec: ClassifierSpec, part_a: ProjectDataset, part_b: ReleaseTable,
                  seed: int, threshold: float = DEFAULT_THRESHOLD) -> BSideResult:
    """Train on all of A (release ids are not features) and score B."""
    labels = part_b.defective
    if labels.all() or not labels.any():
        raise SingleClassTestRelease(f"release {part_b.release_label!r} is single-class")
    model = train(spec, part_a.to_matrix(), seed)
    scores = score_many(model, part_b.features)
    precision, recall, mcc = precision_recall_mcc(confusion(scores, labels, threshold))
    return BSideResult(auc(scores, labels), precision, recall, mcc)


def actual_auc_on_b(spec: ClassifierSpec, part_a: ProjectDataset, part_b: ReleaseTable,
                    seed: int) -> float:
    return b_side_result(spec, part_a, part_b, seed).auc


def select_classifier(technique: TechniqueConfig, part_a: ProjectDataset,
                      roster: Sequence[ClassifierSpec], seed: int, *,
                      estimator: Estimator | None = None,
                      deadline: float | None = None) -> SelectionResult:
    """Estimate every roster member under ``technique`` and pick the best.

    ``estimator`` replaces the technique's own estimate (used to check
    selection under perfect knowledge). Classifiers whose estimate fails are
    excluded with the reason recorded.
    """
    if not roster:
        raise AllExcluded("empty roster")
    if estimator is None:
        plan = plan_for(technique, part_a, plan_seed(seed, technique))
        data = part_a.to_matrix()

        def estimator(spec: ClassifierSpec) -> float:
            return estimate_auc(plan, spec, data, estimate_seed(seed, technique, spec),
                                optimism_reduced=technique.optimism_reduced,
                                deadline=deadline).auc

    estimates: dict[str, float] = {}
    excluded: dict[str, str] = {}
    for spec in roster:
        try:
            estimates[spec.name] = float(estimator(spec))
        except DefectValError as exc:
            excluded[spec.name] = f"{type(exc).__name__}: {exc}"
    chosen = pick_highest(estimates)
    return SelectionResult(technique.id, estimates, chosen, estimates[chosen], excluded)


def evaluate_technique(technique: TechniqueConfig, dataset: ProjectDataset,
                       roster: Sequence[ClassifierSpec], seed: int, *,
                       estimator: Estimator | None = None) -> TechniqueEvaluation:
    if dataset.n_releases < 3:
        raise TooFewReleases(f"{dataset.project_name}: meta-validation needs >= 3 releases")
    part_a, part_b = split_last_release(dataset)
    selection = select_classifier(technique, part_a, roster, seed, estimator=estimator)
    spec = next(s for s in roster if s.name == selection.selected)
    actual = actual_auc_on_b(spec, part_a, part_b, actual_seed(seed, spec))
    return TechniqueEvaluation.from_values(
        dataset.project_name, technique.id, selection.selected, selection.selected_estimate, actual
    )


def baseline_from_actuals(actuals: dict[str, float]) -> BaselineTriple:
    """Best, median and worst classifier by actual AUC.

    With an even count the lower-middle classifier is the median, so the
    baseline is always a classifier that could have been picked. Equal AUCs
    are ordered by name.
    """
    if not actuals:
        raise AllExcluded("no classifier has a computable actual AUC")
    ranked = sorted(actuals, key=lambda name: (actuals[name], name))
    worst, medium, best = ranked[0], ranked[(len(ranked) - 1) // 2], ranked[-1]
    return BaselineTriple(actuals[best], actuals[medium], actuals[worst], best, medium, worst)


def actual_aucs(dataset: ProjectDataset, roster: Sequence[ClassifierSpec],
                seed: int) -> tuple[dict[str, float], dict[str, str]]:
    part_a, part_b = split_last_release(dataset)
    values: dict[str, float] = {}
    failures: dict[str, str] = {}
    for spec in roster:
        try:
            values[spec.name] = actual_auc_on_b(spec, part_a, part_b, actual_seed(seed, spec))
        except DefectValError as exc:
            failures[spec.name] = f"{type(exc).__name__}: {exc}"
    return values, failures


def baselines(dataset: ProjectDataset, roster: Sequence[ClassifierSpec], seed: int) -> BaselineTriple:
    values, _ = actual_aucs(dataset, roster, seed)
    return baseline_from_actuals(values)


@dataclass(frozen=True)
class RQ1Row:
    dataset: str
    classifier: str
    epv_group: str
    auc: float | None
    precision: float | None
    recall: float | None
    mcc: float | None
    error: str = ""


def run_rq1(datasets: Sequence[ProjectDataset], roster: Sequence[ClassifierSpec],
            seed: int) -> list[RQ1Row]:
    """One row per dataset x classifier with B-side AUC/precision/recall/MCC.

    ``seed`` is the master seed. A failing cell is kept with empty metrics.
    """
    groups = epv_group(datasets)
    rows = []
    for dataset in datasets:
        part_a, part_b = split_last_release(dataset)
        d_seed = dataset_seed(seed, dataset.project_name)
        for spec in roster:
            try:
                r = b_side_result(spec, part_a, part_b, actual_seed(d_seed, spec))
            except DefectValError as exc:
                rows.append(RQ1Row(dataset.project_name, spec.name, groups[dataset.project_name],
                                   None, None, None, None, f"{type(exc).__name__}: {exc}"))
                continue
            rows.append(RQ1Row(dataset.project_name, spec.name, groups[dataset.project_name],
                               r.auc, r.precision, r.recall, r.mcc))
    return rows
