"""Cell-level orchestration of a full experiment and deterministic assembly of its report.

A run is split into independent cells:

* ``estimate`` cells, one per dataset x technique x classifier, compute the
  technique's AUC estimate on part A under a wall-clock budget;
* ``actual`` cells, one per dataset x classifier, train on part A and score
  part B (AUC, precision, recall, MCC).

Cells carry their own derived seeds, so results do not depend on which
worker runs them or in what order. Outcomes are merged sorted by cell key.
"""

from __future__ import annotations

import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from string import ascii_lowercase

from ..classifiers import ClassifierSpec
from ..dataset import ProjectDataset, eligible_for_experiment, epv_group, split_last_release
from ..errors import BudgetExceeded, DefectValError
from ..metaval import (
    TechniqueEvaluation,
    actual_seed,
    b_side_result,
    baseline_from_actuals,
    dataset_seed,
    estimate_seed,
    pick_highest,
    plan_seed,
)
from ..metrics import DEFAULT_THRESHOLD
from ..stats import ALPHA, NORMALITY_TEST, compare_paired, two_way_anova
from ..validation import WALK_FORWARD, TechniqueConfig, estimate_auc, plan_for
from .config import RunConfig
from .summaries import dataset_summary, drift_row
from .svgplot import box_stats

ACTUAL = "actual"
ESTIMATE = "estimate"
RQ1_METRICS = ("auc", "precision", "recall", "mcc")


@dataclass(frozen=True, order=True)
class Cell:
    dataset: str
    kind: str
    technique: str
    classifier: str

    @property
    def key(self) -> str:
        return f"{self.dataset}/{self.technique or ACTUAL}/{self.classifier}"


@dataclass(frozen=True)
class CellOutcome:
    cell: Cell
    values: dict | None
    reason: str = ""
    detail: str = ""
    seconds: float = 0.0


# worker-process state, set once per process by _init_worker
_STATE: dict = {}


def _init_worker(datasets: dict[str, ProjectDataset], roster: dict[str, ClassifierSpec],
                 techniques: dict[str, TechniqueConfig], seed: int, budget: float) -> None:
    _STATE.update(datasets=datasets, roster=roster, techniques=techniques, seed=seed, budget=budget)


def _compute(cell: Cell) -> dict:
    dataset = _STATE["datasets"][cell.dataset]
    spec = _STATE["roster"][cell.classifier]
    d_seed = dataset_seed(_STATE["seed"], cell.dataset)
    part_a, part_b = split_last_release(dataset)
    if cell.kind == ACTUAL:
        r = b_side_result(spec, part_a, part_b, actual_seed(d_seed, spec))
        return {"auc": r.auc, "precision": r.precision, "recall": r.recall, "mcc": r.mcc}
    technique = _STATE["techniques"][cell.technique]
    deadline = time.monotonic() + _STATE["budget"]
    plan = plan_for(technique, part_a, plan_seed(d_seed, technique))
    est = estimate_auc(plan, spec, part_a.to_matrix(), estimate_seed(d_seed, technique, spec),
                       optimism_reduced=technique.optimism_reduced, deadline=deadline)
    return {"estimated_auc": est.auc, "runs": len(est.run_aucs), "skipped_runs": est.skipped}


def execute_cell(cell: Cell) -> CellOutcome:
    start = time.perf_counter()
    try:
        values = _compute(cell)
    except BudgetExceeded as exc:
        return CellOutcome(cell, None, "BudgetExceeded", str(exc), time.perf_counter() - start)
    except DefectValError as exc:
        return CellOutcome(cell, None, type(exc).__name__, str(exc), time.perf_counter() - start)
    except Exception as exc:  # a bug in one cell should not discard hours of other cells
        return CellOutcome(cell, None, "UnexpectedError", f"{type(exc).__name__}: {exc}",
                           time.perf_counter() - start)
    return CellOutcome(cell, values, seconds=time.perf_counter() - start)


def plan_cells(datasets: dict[str, ProjectDataset], config: RunConfig) -> list[Cell]:
    cells = []
    for name in sorted(datasets):
        for spec in config.roster:
            cells.append(Cell(name, ACTUAL, "", spec.name))
            for technique in config.techniques:
                cells.append(Cell(name, ESTIMATE, technique.id, spec.name))
    return cells


def run_cells(cells: list[Cell], datasets: dict[str, ProjectDataset], config: RunConfig,
              progress=None) -> list[CellOutcome]:
    """Execute ``cells`` on ``config.workers`` processes; the result is sorted by cell."""
    init_args = (datasets, {s.name: s for s in config.roster},
                 {t.id: t for t in config.techniques}, config.seed, config.cell_budget_seconds)
    # largest datasets first keeps the pool busy at the end of the run
    ordered = sorted(cells, key=lambda c: (-datasets[c.dataset].n_observations, c))
    outcomes = []
    if config.workers == 1:
        _init_worker(*init_args)
        for cell in ordered:
            outcomes.append(execute_cell(cell))
            if progress:
                progress(outcomes[-1], len(outcomes), len(ordered))
    else:
        with ProcessPoolExecutor(config.workers, initializer=_init_worker, initargs=init_args) as pool:
            for outcome in pool.map(execute_cell, ordered, chunksize=1):
                outcomes.append(outcome)
                if progress:
                    progress(outcome, len(outcomes), len(ordered))
    return sorted(outcomes, key=lambda o: o.cell)


# --------------------------------------------------------------------------
# assembly


def _median(values):
    return statistics.median(values) if values else None


def _mean(values):
    return math.fsum(values) / len(values) if values else None


def _stat_or_error(fn, *args) -> dict:
    try:
        return fn(*args).to_json()
    except DefectValError as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}


def _anova_json(rows, metric: str) -> dict:
    data = [(r[metric], r["classifier"], r["epv_group"]) for r in rows if r[metric] is not None]
    try:
        result = two_way_anova(data, ("classifier", "epv"))
    except DefectValError as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}
    return {
        "classifier": result.factors["classifier"].to_json(),
        "epv": result.factors["epv"].to_json(),
        "residual_eta_squared": result.residual_eta_squared,
        "residual_df": result.residual_df,
    }


def parameter_ledger(config: RunConfig) -> dict:
    return {
        "classifiers": [s.to_json() for s in config.roster],
        "techniques": [t.to_json() for t in config.techniques],
        "seed_derivation": {
            "dataset": "derive_seed(master, dataset)",
            "plan": "derive_seed(dataset_seed, technique_id, 'plan')",
            "estimate": "derive_seed(dataset_seed, technique_id, classifier)",
            "estimate_run": "derive_seed(estimate_seed, repeat, run)",
            "actual": "derive_seed(dataset_seed, 'actual', classifier)",
        },
        "classification_threshold": DEFAULT_THRESHOLD,
        "normality_test": NORMALITY_TEST,
        "alpha": ALPHA,
        "epv_groups": "median split, lower ceil(n/2) datasets are Low",
        "medium_baseline": "lower-middle classifier by B-side AUC",
    }


def assemble_report(config: RunConfig, datasets: dict[str, ProjectDataset],
                    outcomes: list[CellOutcome], excluded_datasets: dict[str, str]) -> dict:
    """Turn cell outcomes into the experiment report (a JSON-ready dict).

    Pure and order-independent: outcomes are re-sorted, and nothing
    time-dependent enters the report.
    """
    outcomes = sorted(outcomes, key=lambda o: o.cell)
    roster_names = [s.name for s in config.roster]
    names = sorted(datasets)
    exclusions = [
        {"cell": f"{name}/*/*", "reason": "IneligibleDataset", "detail": detail}
        for name, detail in sorted(excluded_datasets.items())
    ]
    actual: dict[str, dict[str, dict]] = {n: {} for n in names}
    estimates: dict[tuple[str, str], dict[str, dict]] = {
        (n, t.id): {} for n in names for t in config.techniques
    }
    for o in outcomes:
        if o.values is None:
            exclusions.append({"cell": o.cell.key, "reason": o.reason, "detail": o.detail})
        elif o.cell.kind == ACTUAL:
            actual[o.cell.dataset][o.cell.classifier] = o.values
        else:
            estimates[(o.cell.dataset, o.cell.technique)][o.cell.classifier] = o.values

    groups = epv_group([datasets[n] for n in names]) if len(names) >= 2 else {n: "Low" for n in names}

    rq1 = []
    for n in names:
        for c in roster_names:
            values = actual[n].get(c)
            rq1.append({"dataset": n, "classifier": c, "epv_group": groups[n],
                        **{m: (values[m] if values else None) for m in RQ1_METRICS}})

    baselines = {}
    for n in names:
        aucs = {c: v["auc"] for c, v in actual[n].items()}
        if aucs:
            b = baseline_from_actuals(aucs)
            baselines[n] = {"dataset": n, "best_auc": b.best_auc, "medium_auc": b.medium_auc,
                            "worst_auc": b.worst_auc, "best": b.best, "medium": b.medium, "worst": b.worst}
        else:
            exclusions.append({"cell": f"{n}/baselines", "reason": "AllExcluded",
                               "detail": "no classifier has a B-side AUC"})

    evaluations, long_rows = [], []
    for n in names:
        for t in config.techniques:
            est = {c: v["estimated_auc"] for c, v in estimates[(n, t.id)].items()}
            selected = None
            if est:
                selected = pick_highest(est)
                if selected in actual[n]:
                    ev = TechniqueEvaluation.from_values(n, t.id, selected, est[selected],
                                                         actual[n][selected]["auc"])
                    evaluations.append(ev.__dict__.copy())
                else:
                    exclusions.append({"cell": f"{n}/{t.id}/evaluation", "reason": "MissingActual",
                                       "detail": f"selected classifier {selected} has no B-side AUC"})
            else:
                exclusions.append({"cell": f"{n}/{t.id}/evaluation", "reason": "AllExcluded",
                                   "detail": "no classifier has a computable estimate"})
            base = baselines.get(n, {})
            for c in roster_names:
                e = est.get(c)
                a = actual[n].get(c, {}).get("auc")
                bias = e - a if e is not None and a is not None else None
                long_rows.append({
                    "dataset": n, "technique": t.id, "classifier": c,
                    "estimated_auc": e, "actual_auc": a, "bias": bias,
                    "absolute_bias": abs(bias) if bias is not None else None,
                    "selected": c == selected,
                    "best_auc": base.get("best_auc"), "medium_auc": base.get("medium_auc"),
                    "worst_auc": base.get("worst_auc"),
                })

    by_technique = {t.id: {e["dataset"]: e for e in evaluations if e["technique"] == t.id}
                    for t in config.techniques}
    statistics_doc = {
        "H01": {m: _anova_json(rq1, m) for m in RQ1_METRICS},
        "H02": _paired_comparisons(config, by_technique, baselines),
    }
    sanity = []
    for n in names:
        try:
            sanity.append(drift_row(datasets[n]))
        except DefectValError as exc:
            exclusions.append({"cell": f"{n}/sanity", "reason": type(exc).__name__, "detail": str(exc)})
    statistics_doc["H03"] = {
        "significant_datasets": sum(r["significant"] for r in sanity),
        "datasets": len(sanity),
    }

    fig5 = []
    for t in config.techniques:
        values = [e["actual_auc"] for e in by_technique[t.id].values()]
        fig5.append({"technique": t.id, "datasets": len(values),
                     "mean_auc": _mean(values), "median_auc": _median(values)})
    for label in ("best", "medium", "worst"):
        values = [b[f"{label}_auc"] for b in baselines.values()]
        fig5.append({"technique": label, "datasets": len(values),
                     "mean_auc": _mean(values), "median_auc": _median(values)})
    fig6 = []
    for n in names:
        row = {"dataset": n}
        for t in config.techniques:
            e = by_technique[t.id].get(n)
            row[t.id] = e["actual_auc"] if e else None
        for label in ("best", "medium", "worst"):
            row[label] = baselines[n][f"{label}_auc"] if n in baselines else None
        fig6.append(row)
    boxes = {
        measure: [{"technique": t.id, **box_stats([e[measure] for e in by_technique[t.id].values()])}
                  for t in config.techniques]
        for measure in ("bias", "absolute_bias")
    }

    fatal = [f"technique {t.id} has no evaluable dataset" for t in config.techniques
             if not by_technique[t.id]]
    unexpected = [x["cell"] for x in exclusions if x["reason"] == "UnexpectedError"]
    if unexpected:
        fatal.append(f"{len(unexpected)} cells failed unexpectedly")

    return {
        "config": config.to_json(),
        "parameter_ledger": parameter_ledger(config),
        "datasets": [{**dataset_summary(datasets[n]), "epv_group": groups[n]} for n in names],
        "rq1": rq1,
        "rq2": {
            "evaluations": evaluations,
            "baselines": [baselines[n] for n in names if n in baselines],
            "long": long_rows,
        },
        "statistics": statistics_doc,
        "sanity_check": sanity,
        "figures": {"fig5": fig5, "fig6": fig6, "boxes": boxes},
        "directional": directional_summary(config, by_technique, baselines),
        "exclusions": sorted(exclusions, key=lambda x: (x["cell"], x["reason"])),
        "summary": {
            "datasets": len(names),
            "excluded_datasets": len(excluded_datasets),
            "technique_evaluations": len(evaluations),
            "baselines": len(baselines),
            "rq1_rows": len(rq1),
            "rq1_rows_missing": sum(r["auc"] is None for r in rq1),
            "cells": len(outcomes),
            "cells_failed": sum(o.values is None for o in outcomes),
            "exclusions": len(exclusions),
        },
        "status": {"fatal": bool(fatal), "messages": fatal},
    }


def _reference_technique(config: RunConfig) -> TechniqueConfig:
    for t in config.techniques:
        if t.kind == WALK_FORWARD:
            return t
    return config.techniques[0]


def _paired_comparisons(config: RunConfig, by_technique: dict, baselines: dict) -> list[dict]:
    """Reference technique (walk-forward) against every other technique and two baselines."""
    ref = _reference_technique(config)
    others = [t for t in config.techniques if t.id != ref.id]
    rows = []
    for letter, other in zip(ascii_lowercase, others):
        shared = sorted(set(by_technique[ref.id]) & set(by_technique[other.id]))
        for measure in ("actual_auc", "bias", "absolute_bias"):
            pairs = [(by_technique[ref.id][n][measure], by_technique[other.id][n][measure]) for n in shared]
            rows.append({"hypothesis": f"H02{letter}", "x": ref.id, "y": other.id, "measure": measure,
                         "datasets": len(pairs), "report": _stat_or_error(compare_paired, ref.id, other.id, pairs)})
    for label in ("best", "medium"):
        shared = sorted(set(by_technique[ref.id]) & set(baselines))
        pairs = [(by_technique[ref.id][n]["actual_auc"], baselines[n][f"{label}_auc"]) for n in shared]
        rows.append({"hypothesis": f"baseline-{label}", "x": ref.id, "y": label, "measure": "actual_auc",
                     "datasets": len(pairs), "report": _stat_or_error(compare_paired, ref.id, label, pairs)})
    return rows


def directional_summary(config: RunConfig, by_technique: dict, baselines: dict) -> dict:
    """Direction of the headline findings for this run, with the values behind them."""
    ref = _reference_technique(config)
    ref_evals = by_technique[ref.id]
    shared = sorted(set(ref_evals) & set(baselines))
    ref_aucs = [ref_evals[n]["actual_auc"] for n in shared]
    medium = [baselines[n]["medium_auc"] for n in shared]
    mean_ref, mean_medium = _mean(ref_aucs), _mean(medium)
    per_dataset = [(a - m) / m for a, m in zip(ref_aucs, medium) if m > 0]
    wins = sum(a > m for a, m in zip(ref_aucs, medium))
    median_bias = {}
    for t in config.techniques:
        biases = [e["bias"] for e in by_technique[t.id].values()]
        median_bias[t.id] = _median(biases)
    return {
        "reference_technique": ref.id,
        "datasets": len(shared),
        "mean_reference_auc": mean_ref,
        "mean_medium_auc": mean_medium,
        "relative_improvement_of_means": (mean_ref - mean_medium) / mean_medium if shared and mean_medium else None,
        "mean_per_dataset_improvement": _mean(per_dataset),
        "a_reference_mean_exceeds_medium": bool(shared) and mean_ref > mean_medium,
        "reference_beats_medium_count": wins,
        # three quarters of the datasets, i.e. 9 of 12
        "b_reference_beats_medium_on_three_quarters": bool(shared) and 4 * wins >= 3 * len(shared),
        "median_bias": median_bias,
        "c_all_median_biases_positive": all(v is not None and v > 0 for v in median_bias.values()),
    }


def prepare_datasets(loaded: dict[str, ProjectDataset]) -> tuple[dict[str, ProjectDataset], dict[str, str]]:
    eligible, excluded = {}, {}
    for name, dataset in loaded.items():
        if eligible_for_experiment(dataset):
            eligible[name] = dataset
        else:
            excluded[name] = f"{dataset.n_releases} releases; meta-validation needs >= 3"
    return eligible, excluded
