"""Hypothesis tests and effect sizes.

Every test is two-sided and returns a :class:`StatReport`. Fisher's exact
test and the exact Wilcoxon distribution use integer arithmetic, so their
p-values carry no accumulated rounding beyond the final division. The
Student-t, F and Shapiro-Wilk distributions come from scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .errors import AllZeroDifferences, Degenerate, TooFew, ZeroVariance

ALPHA = 0.05
NORMALITY_TEST = "Shapiro-Wilk"
# exact Wilcoxon distribution up to this many nonzero differences
WILCOXON_EXACT_MAX = 20
SHAPIRO_MAX = 5000


@dataclass(frozen=True)
class StatReport:
    method: str
    statistic: float
    p_value: float
    effect_size: float | None
    effect_kind: str | None
    n: int
    notes: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def significant(self) -> bool:
        return self.p_value < ALPHA

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "statistic": _json_number(self.statistic),
            "p_value": self.p_value,
            "effect_size": _json_number(self.effect_size),
            "effect_kind": self.effect_kind,
            "n": self.n,
            "notes": self.notes,
        }


def _json_number(value):
    if value is None or math.isnan(value):
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _clip_p(p: float) -> float:
    return min(1.0, max(0.0, float(p)))


# --------------------------------------------------------------------------
# Fisher exact test


@dataclass(frozen=True)
class ContingencyTable2x2:
    """``[[a, b], [c, d]]``: rows are groups, columns are outcomes."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        cells = (self.a, self.b, self.c, self.d)
        if any(not isinstance(v, (int, np.integer)) or v < 0 for v in cells):
            raise ValueError("cells must be non-negative integers")
        if sum(cells) < 1:
            raise ValueError("table must contain at least one observation")

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d


def odds_ratio(table: ContingencyTable2x2) -> tuple[float, bool]:
    """(a*d)/(b*c), with 0.5 added to every cell when any cell is zero.

    Returns the ratio and whether the correction was applied.
    """
    a, b, c, d = table.a, table.b, table.c, table.d
    corrected = 0 in (a, b, c, d)
    if corrected:
        a, b, c, d = a + 0.5, b + 0.5, c + 0.5, d + 0.5
    return (a * d) / (b * c), corrected


def fisher_exact(table: ContingencyTable2x2) -> StatReport:
    """Two-sided Fisher exact test plus odds ratio.

    The p-value sums the hypergeometric probabilities of every table with the
    observed margins that is no more likely than the observed one. Weights are
    exact integers ``C(r1, x) * C(r2, c1 - x)``, so ties are compared exactly.
    """
    r1 = table.a + table.b
    r2 = table.c + table.d
    c1 = table.a + table.c
    n = table.total

    def weight(x: int) -> int:
        return math.comb(r1, x) * math.comb(r2, c1 - x)

    observed = weight(table.a)
    extreme = sum(
        w for w in (weight(x) for x in range(max(0, c1 - r2), min(r1, c1) + 1)) if w <= observed
    )
    p = _clip_p(Fraction(extreme, math.comb(n, c1)))
    ratio, corrected = odds_ratio(table)
    return StatReport(
        "Fisher exact", ratio, p, ratio, "odds_ratio", n,
        {"table": [[table.a, table.b], [table.c, table.d]], "haldane_correction": corrected},
    )


# --------------------------------------------------------------------------
# paired tests


def _differences(pairs) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=float)
    if pairs.size == 0:
        pairs = pairs.reshape(0, 2)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("pairs must be a sequence of (x, y)")
    return pairs[:, 0] - pairs[:, 1]


def cohens_d_paired(differences) -> float | None:
    """mean(d) / sd(d) with ddof=1; None when undefined."""
    d = np.asarray(differences, dtype=float)
    if d.size < 2:
        return None
    sd = d.std(ddof=1)
    if sd == 0:
        return 0.0 if d.mean() == 0 else None
    return float(d.mean() / sd)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank, returned doubled as integers."""
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    doubled = np.empty(values.size, dtype=np.int64)
    start = 0
    while start < values.size:
        stop = start
        while stop + 1 < values.size and sorted_values[stop + 1] == sorted_values[start]:
            stop += 1
        # average of ranks start+1..stop+1, times two
        doubled[order[start:stop + 1]] = start + stop + 2
        start = stop + 1
    return doubled


def wilcoxon_null_counts(doubled_ranks: Sequence[int]) -> list[int]:
    """Number of sign patterns giving each doubled positive-rank sum."""
    total = int(sum(doubled_ranks))
    counts = [0] * (total + 1)
    counts[0] = 1
    reach = 0
    for r in doubled_ranks:
        r = int(r)
        for s in range(reach, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
        reach += r
    return counts


def wilcoxon_signed_rank(pairs) -> StatReport:
    """Two-sided Wilcoxon signed-rank test on x - y.

    Zero differences are dropped. The statistic is ``W+ - W-`` (rank sum of
    positive differences minus that of negative ones), so swapping x and y
    flips its sign. With at most 20 nonzero differences the p-value comes from
    the exact permutation distribution (ties included); above that, a normal
    approximation with continuity and tie corrections.
    """
    all_diffs = _differences(pairs)
    diffs = all_diffs[all_diffs != 0]
    if diffs.size == 0:
        raise AllZeroDifferences("every pair has a zero difference")
    n = diffs.size
    doubled = _average_ranks(np.abs(diffs))
    w_plus2 = int(doubled[diffs > 0].sum())
    total2 = int(doubled.sum())
    statistic = (2 * w_plus2 - total2) / 2.0
    notes = {"zero_differences_dropped": int(all_diffs.size - n)}
    if n <= WILCOXON_EXACT_MAX:
        counts = wilcoxon_null_counts(doubled)
        lower = sum(counts[: w_plus2 + 1])
        upper = sum(counts[w_plus2:])
        p = _clip_p(Fraction(2 * min(lower, upper), 2 ** n))
        notes["distribution"] = "exact"
    else:
        mean = total2 / 4.0
        _, tie_sizes = np.unique(np.abs(diffs), return_counts=True)
        variance = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes ** 3 - tie_sizes)) / 48.0
        deviation = abs(w_plus2 / 2.0 - mean)
        z = max(deviation - 0.5, 0.0) / math.sqrt(variance)
        p = _clip_p(math.erfc(z / math.sqrt(2)))
        notes["distribution"] = "normal approximation, continuity corrected"
        notes["z"] = z
    return StatReport("Wilcoxon signed-rank", statistic, p, cohens_d_paired(all_diffs),
                      "cohens_d", int(all_diffs.size), notes)


def paired_t_test(pairs) -> StatReport:
    d = _differences(pairs)
    n = d.size
    if n < 2:
        raise TooFew("paired t-test needs at least two pairs")
    sd = d.std(ddof=1)
    if sd == 0:
        raise ZeroVariance("differences have zero variance")
    t = float(d.mean() / (sd / math.sqrt(n)))
    p = _clip_p(2 * sps.t.sf(abs(t), n - 1))
    return StatReport("paired t-test", t, p, float(d.mean() / sd), "cohens_d", n, {"df": n - 1})


def normality_check(values) -> tuple[bool, StatReport]:
    """Shapiro-Wilk at alpha 0.05; ``True`` means consistent with a normal distribution.

    A sample with zero range is reported as not normal.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        raise TooFew("normality check needs at least three values")
    if x.size > SHAPIRO_MAX:
        raise TooFew(f"normality check supports at most {SHAPIRO_MAX} values")
    if np.ptp(x) == 0:
        report = StatReport(NORMALITY_TEST, math.nan, 0.0, None, None, int(x.size),
                            {"alpha": ALPHA, "reason": "zero range"})
        return False, report
    w, p = sps.shapiro(x)
    report = StatReport(NORMALITY_TEST, float(w), _clip_p(p), None, None, int(x.size), {"alpha": ALPHA})
    return report.p_value > ALPHA, report


def compare_paired(x_name: str, y_name: str, pairs) -> StatReport:
    """Paired t-test when both samples look normal, Wilcoxon signed-rank otherwise.

    The effect size is always the paired Cohen's d of x - y. Identical samples
    are reported as no difference (p = 1). If the t-test is chosen but the
    differences are constant, the Wilcoxon test is used instead.
    """
    pairs = np.asarray(pairs, dtype=float)
    d = _differences(pairs)
    if d.size < 3:
        raise TooFew("paired comparison needs at least three pairs")
    notes = {"x": x_name, "y": y_name, "normality_test": NORMALITY_TEST, "alpha": ALPHA}
    if not d.any():
        return StatReport("no difference (identical samples)", 0.0, 1.0, 0.0, "cohens_d",
                          int(d.size), notes)
    x_normal, x_report = normality_check(pairs[:, 0])
    y_normal, y_report = normality_check(pairs[:, 1])
    notes["normality_p"] = {x_name: x_report.p_value, y_name: y_report.p_value}
    if x_normal and y_normal:
        try:
            result = paired_t_test(pairs)
        except ZeroVariance:
            notes["fallback"] = "constant differences"
            result = wilcoxon_signed_rank(pairs)
    else:
        result = wilcoxon_signed_rank(pairs)
    return StatReport(result.method, result.statistic, result.p_value, cohens_d_paired(d),
                      "cohens_d", int(d.size), {**result.notes, **notes})


# --------------------------------------------------------------------------
# two-way ANOVA


@dataclass(frozen=True)
class AnovaResult:
    factors: dict[str, StatReport]
    residual_ss: float
    residual_df: int
    residual_eta_squared: float
    total_ss: float


def _dummies(levels: Sequence) -> tuple[np.ndarray, int]:
    names = sorted(set(levels))
    index = {name: i for i, name in enumerate(names)}
    codes = np.array([index[v] for v in levels])
    return (codes[:, None] == np.arange(1, len(names))[None, :]).astype(float), len(names)


def _residual_ss(y: np.ndarray, design: np.ndarray) -> tuple[float, int]:
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    return float(resid @ resid), int(rank)


def two_way_anova(rows: Iterable[tuple[float, object, object]],
                  factor_names: tuple[str, str] = ("classifier", "epv")) -> AnovaResult:
    """Main-effects two-way ANOVA (no interaction), sequential sums of squares.

    The first factor is entered first. With a balanced design the order does
    not matter. Effect size is eta squared, SS_factor / SS_total; the two
    factors and the residual share sum to one.
    """
    rows = list(rows)
    if not rows:
        raise TooFew("ANOVA needs observations")
    y = np.array([r[0] for r in rows], dtype=float)
    a_dummies, a_levels = _dummies([r[1] for r in rows])
    b_dummies, b_levels = _dummies([r[2] for r in rows])
    if a_levels < 2 or b_levels < 2:
        raise Degenerate("each factor needs at least two levels")
    n = y.size
    centered = y - y.mean()
    ss_total = float(centered @ centered)
    if ss_total == 0:
        raise Degenerate("all responses are equal (zero total sum of squares)")
    ones = np.ones((n, 1))
    ss_after_a, rank_a = _residual_ss(y, np.hstack([ones, a_dummies]))
    ss_res, rank_full = _residual_ss(y, np.hstack([ones, a_dummies, b_dummies]))
    ss_res = max(ss_res, 0.0)
    ss_a = ss_total - ss_after_a
    ss_b = ss_after_a - ss_res
    df_a = rank_a - 1
    df_b = rank_full - rank_a
    df_res = n - rank_full
    ms_res = ss_res / df_res if df_res > 0 else math.nan

    def report(name: str, ss: float, df: int) -> StatReport:
        if df_res > 0 and ms_res > 0 and df > 0:
            f = (ss / df) / ms_res
            p = _clip_p(sps.f.sf(f, df, df_res))
        elif df > 0 and ss > 0:
            f, p = math.inf, 0.0
        else:
            f, p = math.nan, 1.0
        return StatReport("two-way ANOVA (main effects, sequential SS)", f, p, ss / ss_total,
                          "eta_squared", n, {"factor": name, "ss": ss, "df": df, "df_residual": df_res})

    factors = {
        factor_names[0]: report(factor_names[0], ss_a, df_a),
        factor_names[1]: report(factor_names[1], ss_b, df_b),
    }
    return AnovaResult(factors, ss_res, df_res, ss_res / ss_total, ss_total)
