"""Classifiers built from per-feature class bounds: HyperPipes and VFI."""

from __future__ import annotations

import numpy as np


class HyperPipes:
    """One axis-aligned box per class, from the class's per-feature min and max.

    A class's containment is the fraction of features whose value falls inside
    its box. The score is the defective containment normalized over both
    classes, or 0.5 when neither box contains any feature value.
    """

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> HyperPipes:
        self.bounds = [(X[m].min(axis=0), X[m].max(axis=0)) for m in (~y, y)]
        return self

    def containment(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack([
            ((X >= lo) & (X <= hi)).mean(axis=1) for lo, hi in self.bounds
        ])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        c = self.containment(X)
        total = c.sum(axis=1)
        safe = np.where(total > 0, total, 1.0)
        return np.where(total > 0, c[:, 1] / safe, 0.5)


def interval_index(endpoints: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Map values onto the interval partition induced by sorted ``endpoints``.

    With endpoints e0 < ... < e(m-1) the intervals are numbered
    0: (-inf, e0), 1: [e0], 2: (e0, e1), 3: [e1], ..., 2m-1: [e(m-1)], 2m: (e(m-1), inf).
    """
    pos = np.searchsorted(endpoints, values, side="left")
    hit = pos < endpoints.size
    exact = np.zeros(values.shape, dtype=bool)
    exact[hit] = endpoints[pos[hit]] == values[hit]
    return 2 * pos + exact


class VFI:
    """Voting feature intervals (Demiroz and Guvenir, unweighted).

    Per feature, the class minima and maxima cut the axis into point and range
    intervals. An interval's vote for class c is the share of class c's
    training rows that fall in it, normalized over the classes. A test row
    sums the votes of the interval it hits on each feature; the score is the
    defective share of the total (0.5 if no feature votes).
    """

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> VFI:
        classes = (~y, y)
        sizes = np.array([m.sum() for m in classes], dtype=float)
        self.endpoints = []
        self.votes = []
        for j in range(X.shape[1]):
            column = X[:, j]
            ends = np.unique(np.concatenate(
                [[column[m].min(), column[m].max()] for m in classes if m.any()]
            ))
            slots = interval_index(ends, column)
            counts = np.zeros((2 * ends.size + 1, 2))
            for c, m in enumerate(classes):
                counts[:, c] = np.bincount(slots[m], minlength=counts.shape[0])
            with np.errstate(invalid="ignore", divide="ignore"):
                share = np.where(sizes > 0, counts / np.where(sizes > 0, sizes, 1), 0.0)
            total = share.sum(axis=1, keepdims=True)
            self.endpoints.append(ends)
            self.votes.append(np.where(total > 0, share / np.where(total > 0, total, 1), 0.0))
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        tally = np.zeros((X.shape[0], 2))
        for j, (ends, votes) in enumerate(zip(self.endpoints, self.votes)):
            tally += votes[interval_index(ends, X[:, j])]
        total = tally.sum(axis=1)
        return np.where(total > 0, tally[:, 1] / np.where(total > 0, total, 1), 0.5)
