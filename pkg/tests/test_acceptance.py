"""One test per acceptance criterion; each records a pass/fail line printed after the run.

Criteria 1, 2 and 7 need the PROMISE release CSVs (``--promise-dir``, default
``data/promise``) and, for 7, a finished public run (``--public-report``,
default ``out/public``). Without them they fail and say what is missing.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, ROOT
from defectval import metaval
from defectval.classifiers import ClassifierSpec, default_roster
from defectval.dataset import load_manifest
from defectval.harness.cli import EXIT_OK, main
from defectval.metrics import ConfusionCounts, auc, confusion, precision_recall_mcc
from defectval.stats import ContingencyTable2x2, fisher_exact, two_way_anova, wilcoxon_signed_rank
from defectval.validation import (
    BOOTSTRAP,
    REPEATED_KFOLD,
    WALK_FORWARD,
    TechniqueConfig,
    bootstrap_plan,
    kfold_plan,
    walk_forward_plan,
)
from oracles import fisher_family_p_values, wilcoxon_enumerated_p
from synthetic import synthetic_project, write_small_experiment

MANIFESTS = ROOT / "data" / "manifests"

# dataset: (first-half rate, second-half rate, odds ratio, p-value class), copied from the published table
PUBLISHED_DRIFT = {
    "ant": (0.154, 0.235, 1.68, True),
    "ar": (0.127, 0.168, 1.40, False),
    "camel": (0.242, 0.181, 0.69, True),
    "ivy": (0.224, 0.114, 0.44, True),
    "jedit": (0.274, 0.069, 0.20, True),
    "log4j": (0.291, 0.922, 28.13, True),
    "lucene": (0.532, 0.597, 1.30, False),
    "poi": (0.323, 0.640, 3.72, True),
    "synapse": (0.201, 0.336, 2.01, True),
    "velocity": (0.705, 0.341, 0.22, True),
    "xalan": (0.326, 0.730, 5.58, True),
    "xerces": (0.246, 0.486, 2.90, True),
}

# dataset: (releases, observations, rounded EPV), copied from the published table
PUBLISHED_SHAPE = {
    "ant": (5, 1692, 18),
    "ar": (5, 428, 2),
    "camel": (4, 2784, 28),
    "ivy": (3, 704, 6),
    "jedit": (5, 1749, 15),
    "log4j": (3, 449, 13),
    "lucene": (3, 782, 22),
    "poi": (4, 1378, 35),
    "synapse": (3, 635, 8),
    "velocity": (3, 639, 18),
    "xalan": (4, 3320, 90),
    "xerces": (4, 1643, 33),
}


def record(number: int, title: str, failures: list[str], detail: str = "") -> None:
    passed = not failures
    shown = detail if passed else "; ".join(failures[:5]) + (f" (+{len(failures) - 5} more)" if len(failures) > 5 else "")
    ACCEPTANCE_LINES.append((number, title, passed, shown))
    assert passed, shown


def local_manifests(promise_dir: Path, directory: Path) -> tuple[list[Path], list[str]]:
    """Copies of the shipped manifests pointing into ``promise_dir``, plus any missing CSVs."""
    directory.mkdir(parents=True, exist_ok=True)
    paths, missing = [], []
    for name in sorted(PUBLISHED_SHAPE):
        doc = json.loads((MANIFESTS / f"{name}.json").read_text(encoding="utf-8"))
        for entry in doc["releases"]:
            target = promise_dir / Path(entry["path"]).name
            if not target.is_file():
                missing.append(str(target))
            entry["path"] = str(target)
        path = directory / f"{name}.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        paths.append(path)
    return paths, missing


def missing_data_message(missing: list[str], promise_dir: Path) -> list[str]:
    return [f"PROMISE data not available: {len(missing)} release CSVs absent from {promise_dir} "
            f"(first: {Path(missing[0]).name})"]


def test_criterion_1_drift_table(promise_dir, tmp_path):
    title = "first/second-half defect-rate drift matches the published table"
    manifests, missing = local_manifests(promise_dir, tmp_path / "manifests")
    if missing:
        record(1, title, missing_data_message(missing, promise_dir))
    started = time.perf_counter()
    code = main(["sanity-check", *map(str, manifests), "--out", str(tmp_path / "out"), "--format", "json"])
    seconds = time.perf_counter() - started
    failures = [] if code == EXIT_OK else [f"sanity-check exited {code}"]
    doc = json.loads((tmp_path / "out" / "sanity.json").read_text(encoding="utf-8"))
    failures += doc["failures"]
    rows = {r["dataset"]: r for r in doc["rows"]}
    for name, (first, second, ratio, significant) in PUBLISHED_DRIFT.items():
        row = rows.get(name)
        if row is None:
            failures.append(f"{name}: no row")
            continue
        ratio_tolerance = 0.5 if name == "log4j" else 0.05
        if abs(row["first_rate"] - first) > 0.005 or abs(row["second_rate"] - second) > 0.005:
            failures.append(f"{name}: rates {row['first_rate']:.3f}/{row['second_rate']:.3f} vs {first}/{second}")
        if abs(row["odds_ratio"] - ratio) > ratio_tolerance:
            failures.append(f"{name}: odds ratio {row['odds_ratio']:.3f} vs {ratio}")
        if row["significant"] != significant:
            failures.append(f"{name}: p {row['p_value']:.4g} classified {row['significant']} vs {significant}")
    if seconds >= 10:
        failures.append(f"took {seconds:.1f}s (limit 10s)")
    record(1, title, failures, f"12 datasets, {seconds:.2f}s")


def test_criterion_2_dataset_shapes(promise_dir, tmp_path, capsys):
    title = "ingest reports published release/observation counts and rounded EPV"
    manifests, missing = local_manifests(promise_dir, tmp_path / "manifests")
    if missing:
        record(2, title, missing_data_message(missing, promise_dir))
    failures = []
    for manifest in manifests:
        name = manifest.stem
        code = main(["ingest", str(manifest), "--out", str(tmp_path / "out")])
        capsys.readouterr()
        if code != EXIT_OK:
            failures.append(f"{name}: ingest exited {code}")
            continue
        summary = json.loads((tmp_path / "out" / f"{name}.summary.json").read_text(encoding="utf-8"))
        got = (summary["releases"], summary["observations"], summary["epv_rounded"])
        if got != PUBLISHED_SHAPE[name]:
            failures.append(f"{name}: {got} vs {PUBLISHED_SHAPE[name]}")
    record(2, title, failures, "12 datasets")


def brute_force_auc(scores, labels) -> float:
    pos, neg = scores[labels], scores[~labels]
    wins = (pos[:, None] > neg[None, :]).sum() * 2 + (pos[:, None] == neg[None, :]).sum()
    return int(wins) / (2 * pos.size * neg.size)


def test_criterion_3_metric_oracles():
    title = "AUC, precision, recall and MCC equal their direct definitions"
    rng = np.random.default_rng(20240601)
    failures = []
    for case in range(1000):
        n = int(rng.integers(2, 201))
        labels = rng.random(n) < rng.uniform(0.05, 0.95)
        labels[0], labels[1] = True, False
        scores = rng.random(n)
        if case % 2:
            scores = np.round(scores, int(rng.integers(0, 3)))
        if abs(auc(scores, labels) - brute_force_auc(scores, labels)) > 1e-12:
            failures.append(f"AUC case {case}")
        c = confusion(scores, labels)
        expected = (sum(s > 0.5 and y for s, y in zip(scores, labels)),
                    sum(s > 0.5 and not y for s, y in zip(scores, labels)),
                    sum(s <= 0.5 and not y for s, y in zip(scores, labels)),
                    sum(s <= 0.5 and y for s, y in zip(scores, labels)))
        if (c.tp, c.fp, c.tn, c.fn) != expected:
            failures.append(f"confusion case {case}")
    for counts in [tuple(int(v) for v in rng.integers(0, 4, size=4)) for _ in range(2000)]:
        tp, fp, tn, fn = counts
        precision, recall, mcc = precision_recall_mcc(ConfusionCounts(tp, fp, tn, fn))
        exp_precision = tp / (tp + fp) if tp + fp else 0.0
        exp_recall = tp / (tp + fn) if tp + fn else 0.0
        if 0 in (tp + fp, tp + fn, tn + fp, tn + fn):
            exp_mcc = 0.0
        else:
            # informedness/markedness identity, independent of the covariance formula
            npv, tnr = tn / (tn + fn), tn / (tn + fp)
            exp_mcc = math.sqrt(exp_precision * exp_recall * tnr * npv) - math.sqrt(
                (1 - exp_precision) * (1 - exp_recall) * (1 - tnr) * (1 - npv))
        if max(abs(precision - exp_precision), abs(recall - exp_recall), abs(mcc - exp_mcc)) > 1e-12:
            failures.append(f"counts {counts}")
    record(3, title, failures, "1000 scored sets, 2000 confusion tables")


def test_criterion_4_exact_test_oracles():
    title = "Fisher, Wilcoxon and ANOVA agree with exhaustive references"
    failures = []
    tables = 0
    for n in range(1, 61):
        for r1 in range(n + 1):
            for c1 in range(n + 1):
                for table, expected in fisher_family_p_values(r1, n - r1, c1).items():
                    tables += 1
                    got = fisher_exact(ContingencyTable2x2(*table)).p_value
                    if abs(got - expected) > 1e-10:
                        failures.append(f"Fisher {table}: {got} vs {expected}")
    rng = np.random.default_rng(7)
    wilcoxon_cases = 0
    for size in range(1, 13):
        for _ in range(20):
            diffs = rng.integers(-5, 6, size=size)
            if not diffs.any():
                continue
            wilcoxon_cases += 1
            got = wilcoxon_signed_rank(np.column_stack([diffs, np.zeros(size)])).p_value
            expected = wilcoxon_enumerated_p(diffs.tolist())
            if abs(got - expected) > 1e-12:
                failures.append(f"Wilcoxon {diffs.tolist()}: {got} vs {expected}")
    for seed in range(200):
        gen = np.random.default_rng(seed)
        n_a, n_b = int(gen.integers(2, 10)), int(gen.integers(2, 5))
        rows = [(float(gen.random()), f"a{i % n_a}", f"b{int(gen.integers(n_b))}")
                for i in range(n_a * n_b * 2)]
        try:
            result = two_way_anova(rows)
        except Exception:  # degenerate random layout, e.g. one b level drawn
            continue
        total = sum(f.effect_size for f in result.factors.values()) + result.residual_eta_squared
        if abs(total - 1.0) > 1e-12:
            failures.append(f"ANOVA seed {seed}: eta squared sums to {total!r}")
    record(4, title, failures, f"{tables} Fisher tables, {wilcoxon_cases} Wilcoxon samples, 200 ANOVA layouts")


def test_criterion_5_split_invariants():
    title = "split generators keep temporal order, partitions and disjointness"
    failures = []
    holdout = []
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        sizes = [int(v) for v in rng.integers(3, 15, size=int(rng.integers(2, 6)))]
        data = synthetic_project("p", sizes, seed, width=3).to_matrix()
        for run in walk_forward_plan(synthetic_project("p", sizes, seed, width=3)).runs:
            if data.release_ids[run.train].max() >= data.release_ids[run.test].min():
                failures.append(f"walk-forward seed {seed}")
        labels = rng.random(len(data)) < 0.4
        folds = int(rng.integers(2, min(10, len(data)) + 1))
        plan = kfold_plan(labels, folds=folds, repeats=2, stratified=bool(seed % 2), seed=seed)
        for r in range(2):
            tests = np.concatenate([run.test for run in plan.runs if run.repeat == r])
            if sorted(tests.tolist()) != list(range(len(data))):
                failures.append(f"k-fold seed {seed}")
        for run in plan.runs:
            if np.intersect1d(run.train, run.test).size or run.train.size + run.test.size != len(data):
                failures.append(f"k-fold disjoint seed {seed}")
        big = rng.random(1000) < 0.3
        boot = bootstrap_plan(big, iterations=1, seed=seed).runs[0]
        if np.intersect1d(boot.train, boot.test).size or boot.train.size != 1000:
            failures.append(f"bootstrap seed {seed}")
        holdout.append(boot.test.size / 1000)
    mean_holdout = float(np.mean(holdout))
    if abs(mean_holdout - 0.368) > 0.02:
        failures.append(f"mean bootstrap holdout {mean_holdout:.4f}")
    record(5, title, failures, f"1000 seeds, mean bootstrap holdout {mean_holdout:.4f}")


FAST_ROSTER = [ClassifierSpec("J48"), ClassifierSpec("Logistic"), ClassifierSpec("NaiveBayes"),
               ClassifierSpec("IB1"), ClassifierSpec("RandomForest", {"trees": 5})]
FAST_TECHNIQUES = [TechniqueConfig(WALK_FORWARD), TechniqueConfig(REPEATED_KFOLD, folds=3, repeats=1),
                   TechniqueConfig(BOOTSTRAP, bootstrap_iterations=3),
                   TechniqueConfig(BOOTSTRAP, bootstrap_iterations=3, optimism_reduced=True)]
ORACLE_TECHNIQUES = [TechniqueConfig(WALK_FORWARD), TechniqueConfig(REPEATED_KFOLD),
                     TechniqueConfig(BOOTSTRAP), TechniqueConfig(BOOTSTRAP, optimism_reduced=True)]


def test_criterion_6_metavalidation_invariants():
    title = "worst <= technique actual <= best; a perfect oracle always selects the best"
    failures = []
    roster = [s for s in default_roster() if s.name != "RandomForest"] + [ClassifierSpec("RandomForest", {"trees": 10})]
    for k in range(50):
        rng = np.random.default_rng(k)
        sizes = [int(v) for v in rng.integers(25, 50, size=int(rng.integers(3, 5)))]
        rates = [float(v) for v in rng.uniform(0.15, 0.5, size=len(sizes))]
        dataset = synthetic_project(f"s{k}", sizes, k, rates=rates, width=8)
        actual, failed = metaval.actual_aucs(dataset, roster, k)
        best = metaval.baseline_from_actuals(actual)
        for technique in ORACLE_TECHNIQUES:
            ev = metaval.evaluate_technique(technique, dataset, roster, k, estimator=lambda s: actual[s.name])
            if ev.actual_auc != best.best_auc:
                failures.append(f"oracle {k}/{technique.id}: {ev.actual_auc} vs best {best.best_auc}")
        fast = metaval.baselines(dataset, FAST_ROSTER, k)
        for technique in FAST_TECHNIQUES:
            ev = metaval.evaluate_technique(technique, dataset, FAST_ROSTER, k)
            if not fast.worst_auc <= ev.actual_auc <= fast.best_auc:
                failures.append(f"{k}/{technique.id}: {ev.actual_auc} outside [{fast.worst_auc}, {fast.best_auc}]")
    record(6, title, failures, "50 synthetic datasets")


def test_criterion_7_directional_replication(public_report_dir):
    title = "public run finishes in budget and reports the three directional checks"
    report_path, runtime_path = public_report_dir / "report.json", public_report_dir / "runtime.json"
    if not report_path.is_file() or not runtime_path.is_file():
        record(7, title, [f"no public run at {public_report_dir}: it needs the PROMISE CSVs "
                          "and `defectval run --config data/public.json`"])
    report = json.loads(report_path.read_text(encoding="utf-8"))
    runtime = json.loads(runtime_path.read_text(encoding="utf-8"))
    failures = [f"fatal: {m}" for m in report["status"]["messages"]] if report["status"]["fatal"] else []
    if len(report["datasets"]) != 12:
        failures.append(f"{len(report['datasets'])} datasets in report")
    if runtime["total_seconds"] * runtime["workers"] / 4 > 8 * 3600:
        failures.append(f"runtime {runtime['total_seconds']:.0f}s with {runtime['workers']} workers")
    if not report.get("parameter_ledger"):
        failures.append("parameter ledger missing")
    d = report["directional"]
    detail = (f"(a) walk-forward mean exceeds medium: {d['a_reference_mean_exceeds_medium']} "
              f"({d['relative_improvement_of_means']:+.1%}); (b) beats medium on {d['reference_beats_medium_count']}"
              f"/{d['datasets']}: {d['b_reference_beats_medium_on_three_quarters']}; "
              f"(c) all median biases positive: {d['c_all_median_biases_positive']}; "
              f"{runtime['total_seconds'] / 3600:.2f} h on {runtime['workers']} workers")
    record(7, title, failures, detail)


def test_criterion_8_determinism(tmp_path):
    title = "identical config and seed give byte-identical reports with 1 and 8 workers"
    config = write_small_experiment(tmp_path)
    outputs = {}
    for workers in (1, 8):
        out = tmp_path / f"w{workers}"
        assert main(["run", "--config", str(config), "--quiet", "--workers", str(workers), "--out", str(out)]) == EXIT_OK
        outputs[workers] = {p.name: p.read_bytes() for p in sorted(out.iterdir())
                            if p.suffix in {".csv", ".json"} and p.name != "runtime.json"}
    failures = [name for name in outputs[1] if outputs[1][name] != outputs[8].get(name)]
    if set(outputs[1]) != set(outputs[8]):
        failures.append("different file sets")
    record(8, title, failures, f"{len(outputs[1])} CSV/JSON files identical")


def test_shipped_manifests_cover_the_public_datasets():
    assert sorted(p.stem for p in MANIFESTS.glob("*.json")) == sorted(PUBLISHED_SHAPE)
    for name in PUBLISHED_SHAPE:
        assert len(load_manifest(MANIFESTS / f"{name}.json").releases) == PUBLISHED_SHAPE[name][0]
