"""Threshold-free (AUC) and threshold-dependent accuracy measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingleClass

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _as_scored(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D and equally long")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    return scores, labels


def auc(scores, labels) -> float:
    """Area under the ROC curve as the Mann-Whitney pair statistic.

    Over all (defective, clean) pairs a higher defective score counts 1 and a
    tie counts 1/2. Counting is done per tie group in integers, so the result
    is exact up to the final division.
    """
    scores, labels = _as_scored(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs at least one defective and one clean unit")
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    # boundaries of runs of equal scores
    starts = np.flatnonzero(np.r_[True, sorted_scores[1:] != sorted_scores[:-1]])
    pos_per_group = np.add.reduceat(sorted_labels.astype(np.int64), starts)
    size_per_group = np.diff(np.r_[starts, sorted_scores.size])
    neg_per_group = size_per_group - pos_per_group
    neg_below = np.cumsum(neg_per_group) - neg_per_group
    # twice the win count, kept integral
    doubled = int(2 * (pos_per_group * neg_below).sum() + (pos_per_group * neg_per_group).sum())
    return doubled / (2 * n_pos * n_neg)


def confusion(scores, labels, threshold: float = DEFAULT_THRESHOLD) -> ConfusionCounts:
    """Predicted defective iff score > threshold (strict)."""
    scores, labels = _as_scored(scores, labels)
    predicted = scores > threshold
    return ConfusionCounts(
        tp=int((predicted & labels).sum()),
        fp=int((predicted & ~labels).sum()),
        tn=int((~predicted & ~labels).sum()),
        fn=int((~predicted & labels).sum()),
    )


def precision_recall_mcc(c: ConfusionCounts) -> tuple[float, float, float]:
    """Precision, recall and Matthews correlation; a zero denominator gives 0."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    denominator = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    mcc = (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denominator) if denominator else 0.0
    return precision, recall, mcc
