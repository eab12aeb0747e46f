from __future__ import annotations

import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defectval.errors import SingleClass
from defectval.metrics import ConfusionCounts, auc, confusion, precision_recall_mcc


def pairwise_auc(scores, labels) -> float:
    """Direct Mann-Whitney count over every (defective, clean) pair."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_perfect_inverted_and_constant():
    labels = [True, True, False, False]
    assert auc([0.9, 0.8, 0.2, 0.1], labels) == 1.0
    assert auc([0.1, 0.2, 0.8, 0.9], labels) == 0.0
    assert auc([0.5] * 4, labels) == 0.5


def test_ties_count_half():
    assert auc([0.5, 0.5, 0.1], [True, False, False]) == 0.75


def test_single_class_raises():
    with pytest.raises(SingleClass):
        auc([0.1, 0.2], [True, True])
    with pytest.raises(SingleClass):
        auc([0.1, 0.2], [False, False])


def test_invalid_inputs():
    with pytest.raises(ValueError):
        auc([0.1, 0.2], [True])
    with pytest.raises(ValueError):
        auc([0.1, float("nan")], [True, False])


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=60))
def test_auc_matches_pairwise_count(rows):
    scores = [s / 6 for s, _ in rows]
    labels = [y for _, y in rows]
    if all(labels) or not any(labels):
        return
    assert abs(auc(scores, labels) - pairwise_auc(scores, labels)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_auc_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    scores = rng.random(40)
    labels = rng.random(40) < 0.4
    if labels.all() or not labels.any():
        return
    assert auc(scores, labels) == auc(np.exp(3 * scores), labels)
    assert math.isclose(auc(scores, labels) + auc(-scores, labels), 1.0, abs_tol=1e-12)


def test_confusion_uses_strict_threshold():
    c = confusion([0.5, 0.51, 0.2, 0.9], [True, True, False, False])
    assert c == ConfusionCounts(tp=1, fp=1, tn=1, fn=1)


def test_precision_recall_mcc_formulas():
    c = ConfusionCounts(tp=6, fp=2, tn=9, fn=3)
    precision, recall, mcc = precision_recall_mcc(c)
    assert precision == 6 / 8
    assert recall == 6 / 9
    assert math.isclose(mcc, (6 * 9 - 2 * 3) / math.sqrt(8 * 9 * 11 * 12), rel_tol=1e-15)


@pytest.mark.parametrize("counts", [
    ConfusionCounts(0, 0, 5, 5),   # nothing predicted defective
    ConfusionCounts(0, 3, 2, 0),   # no actual defective
    ConfusionCounts(4, 6, 0, 0),   # everything predicted defective
])
def test_zero_denominators_give_zero(counts):
    precision, recall, mcc = precision_recall_mcc(counts)
    if counts.tp + counts.fp == 0:
        assert precision == 0.0
    if counts.tp + counts.fn == 0:
        assert recall == 0.0
    assert mcc == 0.0


def test_mcc_perfect_and_inverse():
    assert precision_recall_mcc(ConfusionCounts(4, 0, 6, 0))[2] == 1.0
    assert precision_recall_mcc(ConfusionCounts(0, 6, 0, 4))[2] == -1.0
