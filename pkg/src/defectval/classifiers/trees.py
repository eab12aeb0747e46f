"""Decision trees: C4.5-style J48 and the randomized trees of a random forest.

Both trees split numeric features in two at the midpoint between consecutive
distinct values (``x <= threshold`` goes left) and store a defect probability
at each leaf. Prediction walks all rows down the tree at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np
from scipy.special import xlogy


def _weighted_entropy(pos, total):
    """``total * H(pos/total)`` in nats, elementwise; 0 for empty or pure counts."""
    neg = total - pos
    return xlogy(total, total) - xlogy(pos, pos) - xlogy(neg, neg)


def _midpoint(lo: float, hi: float) -> float:
    mid = (lo + hi) / 2.0
    # adjacent floats: keep ``lo`` on the left side
    return lo if mid >= hi else mid


@dataclass
class _Split:
    feature: int
    threshold: float
    gain: float
    gain_ratio: float


@dataclass
class TreeArrays:
    """Flat tree: node ``i`` is a leaf iff ``feature[i] < 0``."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.value) - 1

    def freeze(self) -> FrozenTree:
        return FrozenTree(
            np.array(self.feature, dtype=np.int64),
            np.array(self.threshold, dtype=float),
            np.array(self.left, dtype=np.int64),
            np.array(self.right, dtype=np.int64),
            np.array(self.value, dtype=float),
        )


@dataclass(frozen=True, eq=False)
class FrozenTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            idx = rows[active]
            current = node[idx]
            go_left = X[idx, self.feature[current]] <= self.threshold[current]
            node[idx] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[node] >= 0
        return self.value[node]


def _candidate_splits(X: np.ndarray, y: np.ndarray, features: np.ndarray, min_side: int):
    """Best information-gain threshold for each feature in ``features``.

    Returns (gain, threshold, n_boundaries, left_size) arrays aligned with
    ``features``; gain is -inf where a feature has no admissible split.
    """
    n = y.size
    block = X[:, features]
    order = np.argsort(block, axis=0, kind="stable")
    values = np.take_along_axis(block, order, axis=0)
    labels = y[order].astype(np.int64)
    n_pos = int(y.sum())
    left_pos = np.cumsum(labels, axis=0)[:-1]
    left_n = np.arange(1, n)[:, None]
    right_n = n - left_n
    boundary = values[:-1] != values[1:]
    admissible = boundary & (left_n >= min_side) & (right_n >= min_side)
    parent = _weighted_entropy(float(n_pos), float(n))
    child = _weighted_entropy(left_pos, left_n) + _weighted_entropy(n_pos - left_pos, right_n)
    # information gain in bits
    gain = np.where(admissible, (parent - child) / (n * np.log(2)), -np.inf)
    best = np.argmax(gain, axis=0)
    cols = np.arange(features.size)
    best_gain = gain[best, cols]
    thresholds = np.array([
        _midpoint(values[b, c], values[b + 1, c]) if np.isfinite(best_gain[c]) else math.nan
        for c, b in enumerate(best)
    ])
    return best_gain, thresholds, boundary.sum(axis=0), left_n[best, 0]


# --------------------------------------------------------------------------
# C4.5 / J48


def added_errors(n: float, e: float, confidence: float) -> float:
    """Pessimistic extra errors for a leaf with ``e`` errors out of ``n`` (C4.5 U_CF bound)."""
    if confidence > 0.5:
        raise ValueError("confidence factor must be <= 0.5")
    if n <= 0:
        return 0.0
    if e < 1:
        base = n * (1 - confidence ** (1 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1, confidence) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1 - confidence)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


class _C45Node:
    __slots__ = ("n", "pos", "split", "children")

    def __init__(self, n: int, pos: int):
        self.n = n
        self.pos = pos
        self.split: tuple[int, float] | None = None
        self.children: tuple[_C45Node, _C45Node] | None = None

    @property
    def errors(self) -> int:
        return min(self.pos, self.n - self.pos)


class C45Tree:
    """J48: gain-ratio splits, MDL-corrected numeric thresholds, error-based pruning."""

    def __init__(self, min_leaf: int = 2, confidence: float = 0.25, pruned: bool = True):
        self.min_leaf = min_leaf
        self.confidence = confidence
        self.pruned = pruned
        self.tree: FrozenTree | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator | None = None) -> C45Tree:
        root = self._grow(X, y, np.arange(y.size))
        if self.pruned:
            self._prune(root)
        arrays = TreeArrays()
        self._emit(root, arrays)
        self.tree = arrays.freeze()
        return self

    def _choose(self, X: np.ndarray, y: np.ndarray) -> _Split | None:
        n = y.size
        min_side = 0.1 * n / 2
        min_side = self.min_leaf if min_side <= self.min_leaf else min(min_side, 25)
        min_side = int(math.ceil(min_side))
        features = np.arange(X.shape[1])
        gains, thresholds, boundaries, left_sizes = _candidate_splits(X, y, features, min_side)
        usable = np.isfinite(gains)
        if not usable.any():
            return None
        # MDL penalty for picking one threshold among the candidate boundaries
        gains = np.where(usable, gains - np.log2(np.maximum(boundaries, 1)) / n, -np.inf)
        usable &= gains > 0
        if not usable.any():
            return None
        average = gains[usable].mean()
        best: _Split | None = None
        for f in np.flatnonzero(usable):
            if gains[f] < average - 1e-3:
                continue
            p = left_sizes[f] / n
            split_info = -(p * math.log2(p) + (1 - p) * math.log2(1 - p))
            ratio = gains[f] / split_info
            if best is None or ratio > best.gain_ratio:
                best = _Split(int(f), float(thresholds[f]), float(gains[f]), ratio)
        return best

    def _grow(self, X: np.ndarray, y: np.ndarray, rows: np.ndarray) -> _C45Node:
        labels = y[rows]
        node = _C45Node(rows.size, int(labels.sum()))
        if node.errors == 0 or rows.size < 2 * self.min_leaf:
            return node
        split = self._choose(X[rows], labels)
        if split is None:
            return node
        go_left = X[rows, split.feature] <= split.threshold
        node.split = (split.feature, split.threshold)
        node.children = (
            self._grow(X, y, rows[go_left]),
            self._grow(X, y, rows[~go_left]),
        )
        return node

    def _leaf_estimate(self, node: _C45Node) -> float:
        return node.errors + added_errors(node.n, node.errors, self.confidence)

    def _prune(self, node: _C45Node) -> float:
        if node.children is None:
            return self._leaf_estimate(node)
        subtree = sum(self._prune(child) for child in node.children)
        leaf = self._leaf_estimate(node)
        if leaf <= subtree + 0.1:
            node.children = None
            node.split = None
            return leaf
        return subtree

    def _emit(self, node: _C45Node, arrays: TreeArrays) -> int:
        index = arrays.add((node.pos + 1) / (node.n + 2))
        if node.children is not None:
            feature, threshold = node.split
            arrays.feature[index] = feature
            arrays.threshold[index] = threshold
            arrays.left[index] = self._emit(node.children[0], arrays)
            arrays.right[index] = self._emit(node.children[1], arrays)
        return index

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.tree.predict(X)


# --------------------------------------------------------------------------
# random forest


class RandomTree:
    """Unpruned information-gain tree drawing a random feature subset at every node.

    If none of the drawn features yields a positive gain, the remaining
    features are tried in the same random order until one does.
    """

    def __init__(self, features_per_split: int, min_leaf: int = 1):
        self.features_per_split = features_per_split
        self.min_leaf = min_leaf
        self.tree: FrozenTree | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> RandomTree:
        arrays = TreeArrays()
        self._grow(X, y, np.arange(y.size), rng, arrays)
        self.tree = arrays.freeze()
        return self

    def _grow(self, X, y, rows, rng, arrays) -> int:
        labels = y[rows]
        pos = int(labels.sum())
        index = arrays.add(pos / rows.size)
        if pos == 0 or pos == rows.size or rows.size < 2 * self.min_leaf:
            return index
        order = rng.permutation(X.shape[1])
        m = min(self.features_per_split, order.size)
        sub = X[rows]
        gains, thresholds, _, _ = _candidate_splits(sub, labels, order[:m], self.min_leaf)
        chosen = None
        if np.isfinite(gains).any() and gains.max() > 0:
            k = int(np.argmax(gains))
            chosen = (int(order[k]), float(thresholds[k]))
        else:
            for f in order[m:]:
                g, t, _, _ = _candidate_splits(sub, labels, np.array([f]), self.min_leaf)
                if np.isfinite(g[0]) and g[0] > 0:
                    chosen = (int(f), float(t[0]))
                    break
        if chosen is None:
            return index
        feature, threshold = chosen
        go_left = sub[:, feature] <= threshold
        arrays.feature[index] = feature
        arrays.threshold[index] = threshold
        left = self._grow(X, y, rows[go_left], rng, arrays)
        right = self._grow(X, y, rows[~go_left], rng, arrays)
        arrays.left[index] = left
        arrays.right[index] = right
        return index

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.tree.predict(X)


def resolve_features_per_split(setting, width: int) -> int:
    if setting == "sqrt":
        return max(1, math.ceil(math.sqrt(width)))
    return min(int(setting), width)


class RandomForest:
    """Bagged :class:`RandomTree` ensemble; the score is the mean leaf probability.

    For each tree the generator is consumed as: one bootstrap draw of n row
    indices, then the tree's own per-node feature permutations.
    """

    def __init__(self, trees: int = 100, features_per_split="sqrt", min_leaf: int = 1):
        self.trees = trees
        self.features_per_split = features_per_split
        self.min_leaf = min_leaf
        self.members: list[RandomTree] = []

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> RandomForest:
        n, width = X.shape
        m = resolve_features_per_split(self.features_per_split, width)
        self.members = []
        for _ in range(self.trees):
            sample = rng.integers(0, n, size=n)
            self.members.append(RandomTree(m, self.min_leaf).fit(X[sample], y[sample], rng))
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros(X.shape[0])
        for member in self.members:
            total += member.predict_proba(X)
        return total / len(self.members)
