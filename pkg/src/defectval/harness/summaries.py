"""Per-dataset summaries: dataset statistics and first/second-half defect-rate drift."""

from __future__ import annotations

from ..dataset import ProjectDataset, defect_rate, round_half_up, split_halves
from ..stats import ContingencyTable2x2, fisher_exact


def dataset_summary(dataset: ProjectDataset) -> dict:
    return {
        "dataset": dataset.project_name,
        "releases": dataset.n_releases,
        "release_labels": [t.release_label for t in dataset.releases],
        "observations": dataset.n_observations,
        "features": len(dataset.feature_names),
        "defective": dataset.n_defective,
        "epv": dataset.epv,
        "epv_rounded": round_half_up(dataset.epv),
    }


def format_summary(summary: dict) -> str:
    return (
        f"{summary['dataset']}: {summary['releases']} releases, {summary['observations']} observations, "
        f"{summary['features']} features (+ label), EPV {summary['epv']:.2f} (~{summary['epv_rounded']})"
    )


def drift_row(dataset: ProjectDataset) -> dict:
    """Defect rates of the first and second half of the release history, with a Fisher test.

    The table is ``[[first clean, first defective], [second clean, second defective]]``
    so an odds ratio above 1 means the defect rate went up.
    """
    first, second = split_halves(dataset)
    first_def, first_total, first_rate = defect_rate(first)
    second_def, second_total, second_rate = defect_rate(second)
    table = ContingencyTable2x2(first_total - first_def, first_def, second_total - second_def, second_def)
    report = fisher_exact(table)
    difference = second_rate - first_rate
    return {
        "dataset": dataset.project_name,
        "first_releases": [t.release_label for t in first],
        "second_releases": [t.release_label for t in second],
        "first_defective": first_def,
        "first_total": first_total,
        "first_rate": first_rate,
        "second_defective": second_def,
        "second_total": second_total,
        "second_rate": second_rate,
        "difference": difference,
        "relative_difference": difference / first_rate if first_rate else None,
        "p_value": report.p_value,
        "odds_ratio": report.effect_size,
        "haldane_correction": report.notes["haldane_correction"],
        "significant": report.significant,
    }
