from __future__ import annotations

import numpy as np


class IBk:
    """k-nearest neighbours; the score is the defective fraction among the k nearest.

    Euclidean distance; equal distances are resolved by training-row order.
    Inputs are expected to be min-max normalized already.
    """

    def __init__(self, k: int = 3):
        self.k = k

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> IBk:
        self.X = np.array(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        k = min(self.k, self.y.size)
        out = np.empty(X.shape[0])
        # chunked so the (rows x train x features) difference tensor stays small
        step = max(1, 2_000_000 // max(1, self.X.size))
        for start in range(0, X.shape[0], step):
            block = X[start:start + step]
            diff = block[:, None, :] - self.X[None, :, :]
            dist = np.einsum("ijk,ijk->ij", diff, diff)
            nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
            out[start:start + step] = self.y[nearest].mean(axis=1)
        return out
