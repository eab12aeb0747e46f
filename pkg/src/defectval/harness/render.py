"""Write an experiment report (the JSON-ready dict) in the requested formats."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from ..errors import UnknownFormat
from .config import FORMATS
from .svgplot import bar_chart_svg, box_plot_svg

LONG_COLUMNS = ("dataset", "technique", "classifier", "estimated_auc", "actual_auc", "bias",
                "absolute_bias", "selected", "best_auc", "medium_auc", "worst_auc")


def clean_json(value):
    """Replace NaN/inf with JSON-safe values, recursively."""
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, dict):
        return {k: clean_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean_json(v) for v in value]
    return value


def dumps_json(doc) -> str:
    return json.dumps(clean_json(doc), indent=2, allow_nan=False) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ";".join(_cell(v) for v in value)
    return str(value)


def table_csv(rows: list[dict], columns=None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buffer.getvalue()


def _statistics_rows(report: dict) -> list[dict]:
    rows = []
    stats = report["statistics"]
    for metric, entry in stats["H01"].items():
        for factor in ("classifier", "epv"):
            r = entry.get(factor, {})
            rows.append({"hypothesis": "H01", "measure": metric, "comparison": factor,
                         "method": r.get("method"), "statistic": r.get("statistic"),
                         "p_value": r.get("p_value"), "effect_size": r.get("effect_size"),
                         "effect_kind": r.get("effect_kind"), "error": entry.get("error")})
    for entry in stats["H02"]:
        r = entry["report"]
        rows.append({"hypothesis": entry["hypothesis"], "measure": entry["measure"],
                     "comparison": f"{entry['x']} vs {entry['y']}", "method": r.get("method"),
                     "statistic": r.get("statistic"), "p_value": r.get("p_value"),
                     "effect_size": r.get("effect_size"), "effect_kind": r.get("effect_kind"),
                     "error": r.get("error")})
    for row in report["sanity_check"]:
        rows.append({"hypothesis": "H03", "measure": "defect_rate", "comparison": row["dataset"],
                     "method": "Fisher exact", "statistic": row["odds_ratio"], "p_value": row["p_value"],
                     "effect_size": row["odds_ratio"], "effect_kind": "odds_ratio", "error": None})
    return rows


SANITY_COLUMNS = ("dataset", "first_defective", "first_total", "first_rate", "second_defective",
                  "second_total", "second_rate", "difference", "relative_difference", "p_value",
                  "odds_ratio", "significant")


def csv_files(report: dict) -> dict[str, str]:
    rq2 = report["rq2"]
    return {
        "results.csv": table_csv(rq2["long"], LONG_COLUMNS),
        "evaluations.csv": table_csv(rq2["evaluations"], ("dataset", "technique", "selected", "estimated_auc",
                                                          "actual_auc", "bias", "absolute_bias")),
        "baselines.csv": table_csv(rq2["baselines"], ("dataset", "best_auc", "medium_auc", "worst_auc",
                                                      "best", "medium", "worst")),
        "rq1.csv": table_csv(report["rq1"], ("dataset", "classifier", "epv_group", "auc", "precision",
                                             "recall", "mcc")),
        "sanity.csv": table_csv(report["sanity_check"], SANITY_COLUMNS),
        "statistics.csv": table_csv(_statistics_rows(report), ("hypothesis", "measure", "comparison", "method",
                                                               "statistic", "p_value", "effect_size",
                                                               "effect_kind", "error")),
        "fig5.csv": table_csv(report["figures"]["fig5"], ("technique", "datasets", "mean_auc", "median_auc")),
        "fig6.csv": table_csv(report["figures"]["fig6"]),
        "exclusions.csv": table_csv(report["exclusions"], ("cell", "reason", "detail")),
    }


def _fmt(value, digits: int = 3) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def markdown_table(rows: list[dict], columns, headers=None) -> list[str]:
    headers = headers or columns
    lines = ["| " + " | ".join(headers) + " |", "|" + "---|" * len(headers)]
    for row in rows:
        lines.append("| " + " | ".join(_fmt(row.get(c)) for c in columns) + " |")
    return lines


def sanity_markdown(rows: list[dict]) -> list[str]:
    shaped = []
    for r in rows:
        rel = r["relative_difference"]
        shaped.append({**r, "relative": f"{rel * 100:+.0f}%" if rel is not None else "n/a",
                       "p": "<0.001" if r["p_value"] < 0.001 else f"{r['p_value']:.3f}",
                       "or": f"{r['odds_ratio']:.2f}"})
    lines = markdown_table(shaped, ("dataset", "first_rate", "second_rate", "difference", "relative", "p", "or"),
                           ("dataset", "first half", "second half", "difference", "relative", "p", "odds ratio"))
    significant = sum(r["significant"] for r in rows)
    lines.append("")
    lines.append(f"{significant} of {len(rows)} datasets differ at alpha 0.05.")
    return lines


def markdown_report(report: dict) -> str:
    out = ["# Meta-validation report", ""]
    cfg = report["config"]
    out += [f"Seed {cfg['seed']}; {len(cfg['datasets'])} datasets; "
            f"{len(cfg['roster'])} classifiers; techniques: {', '.join(t['id'] for t in cfg['techniques'])}.", ""]
    status = report["status"]
    if status["fatal"]:
        out += ["**Run failed:** " + "; ".join(status["messages"]), ""]

    out += ["## Datasets", ""]
    out += markdown_table(report["datasets"], ("dataset", "releases", "observations", "features", "epv", "epv_group"))
    out += ["", "## Directional summary", ""]
    d = report["directional"]
    out += [
        f"- Reference technique: {d['reference_technique']} over {d['datasets']} datasets.",
        f"- Mean technique AUC {_fmt(d['mean_reference_auc'])} vs medium baseline {_fmt(d['mean_medium_auc'])} "
        f"(relative improvement {_fmt(d['relative_improvement_of_means'])}); exceeds: "
        f"{_fmt(d['a_reference_mean_exceeds_medium'])}.",
        f"- Beats the medium baseline on {d['reference_beats_medium_count']} of {d['datasets']} datasets; "
        f"three quarters or more: {_fmt(d['b_reference_beats_medium_on_three_quarters'])}.",
        "- Median bias: " + ", ".join(f"{k} {_fmt(v)}" for k, v in d["median_bias"].items())
        + f"; all positive: {_fmt(d['c_all_median_biases_positive'])}.",
    ]
    out += ["", "## Technique evaluations", ""]
    out += markdown_table(report["rq2"]["evaluations"],
                          ("dataset", "technique", "selected", "estimated_auc", "actual_auc", "bias", "absolute_bias"))
    out += ["", "## Baselines", ""]
    out += markdown_table(report["rq2"]["baselines"],
                          ("dataset", "best_auc", "medium_auc", "worst_auc", "best", "medium", "worst"))
    out += ["", "## Technique AUC by technique", ""]
    out += markdown_table(report["figures"]["fig5"], ("technique", "datasets", "mean_auc", "median_auc"))
    out += ["", "## Statistics", ""]
    out += markdown_table([r for r in _statistics_rows(report) if r["hypothesis"] != "H03"],
                          ("hypothesis", "measure", "comparison", "method", "p_value", "effect_size",
                           "effect_kind", "error"))
    out += ["", "## Defect-rate drift (first vs second half)", ""]
    out += sanity_markdown(report["sanity_check"])
    out += ["", "## Exclusions", ""]
    if report["exclusions"]:
        out += markdown_table(report["exclusions"], ("cell", "reason", "detail"))
    else:
        out.append("None.")
    s = report["summary"]
    out += ["", f"{s['technique_evaluations']} technique evaluations, {s['baselines']} baselines, "
                f"{s['rq1_rows']} RQ1 rows ({s['rq1_rows_missing']} missing), "
                f"{s['cells_failed']} of {s['cells']} cells failed.", ""]
    return "\n".join(out)


def svg_files(report: dict) -> dict[str, str]:
    boxes = report["figures"]["boxes"]
    files = {
        f"{measure}.svg": box_plot_svg(measure.replace("_", " ").capitalize(),
                                       [(b["technique"], b) for b in boxes[measure]])
        for measure in ("bias", "absolute_bias")
    }
    files["fig5_mean_auc.svg"] = bar_chart_svg(
        "Mean technique AUC", [(r["technique"], r["mean_auc"]) for r in report["figures"]["fig5"]]
    )
    return files


def render(report: dict, formats, out_dir: str | Path) -> list[Path]:
    """Write ``report`` in each of ``formats`` under ``out_dir``; returns the written paths."""
    out_dir = Path(out_dir)
    files: dict[str, str] = {}
    for fmt in formats:
        if fmt not in FORMATS:
            raise UnknownFormat(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
        if fmt == "json":
            files["report.json"] = dumps_json(report)
        elif fmt == "csv":
            files.update(csv_files(report))
        elif fmt == "markdown":
            files["report.md"] = markdown_report(report)
        else:
            files.update(svg_files(report))
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(files):
        path = out_dir / name
        path.write_text(files[name], encoding="utf-8")
        written.append(path)
    return written
