from __future__ import annotations

import numpy as np
from scipy.special import logsumexp


class NaiveBayes:
    """Gaussian naive Bayes with Laplace-smoothed class priors.

    Per-class variances are floored at ``var_floor`` times the feature's
    training range. Features that are constant on the training rows carry no
    information and are ignored.
    """

    def __init__(self, var_floor: float = 1e-6):
        self.var_floor = var_floor

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> NaiveBayes:
        spread = X.max(axis=0) - X.min(axis=0)
        self.keep = spread > 0
        Xk = X[:, self.keep]
        floor = self.var_floor * spread[self.keep]
        n = y.size
        self.log_prior = np.empty(2)
        self.means = np.empty((2, Xk.shape[1]))
        self.vars = np.empty((2, Xk.shape[1]))
        for c, mask in enumerate((~y, y)):
            rows = Xk[mask]
            self.log_prior[c] = np.log((mask.sum() + 1) / (n + 2))
            self.means[c] = rows.mean(axis=0)
            self.vars[c] = np.maximum(rows.var(axis=0), floor)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Xk = X[:, self.keep]
        joint = np.empty((X.shape[0], 2))
        for c in range(2):
            diff = Xk - self.means[c]
            joint[:, c] = self.log_prior[c] - 0.5 * np.sum(
                np.log(2 * np.pi * self.vars[c]) + diff * diff / self.vars[c], axis=1
            )
        return np.exp(joint[:, 1] - logsumexp(joint, axis=1))
