from __future__ import annotations

import numpy as np
from scipy.special import expit


class Logistic:
    """Ridge logistic regression fitted by iteratively reweighted least squares.

    Features are standardized internally for conditioning; the ridge penalty
    applies to the standardized slopes, never the intercept.
    """

    def __init__(self, ridge: float = 1e-8, max_iter: int = 200, tol: float = 1e-6):
        self.ridge = ridge
        self.max_iter = max_iter
        self.tol = tol
        self.iterations = 0

    def _design(self, X: np.ndarray) -> np.ndarray:
        Z = (X - self.mean) / self.scale
        return np.hstack([np.ones((X.shape[0], 1)), Z])

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> Logistic:
        self.mean = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale = np.where(scale > 0, scale, 1.0)
        A = self._design(X)
        t = y.astype(float)
        penalty = np.full(A.shape[1], self.ridge)
        penalty[0] = 0.0
        beta = np.zeros(A.shape[1])

        def objective(b):
            eta = A @ b
            # log-likelihood written to stay finite for large |eta|
            ll = np.sum(t * eta - np.logaddexp(0.0, eta))
            return -ll + 0.5 * np.sum(penalty * b * b)

        current = objective(beta)
        for self.iterations in range(1, self.max_iter + 1):
            p = expit(A @ beta)
            w = np.maximum(p * (1 - p), 1e-10)
            gradient = A.T @ (t - p) - penalty * beta
            hessian = (A * w[:, None]).T @ A + np.diag(penalty)
            try:
                step = np.linalg.solve(hessian, gradient)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hessian, gradient, rcond=None)[0]
            # halve the Newton step until the penalized deviance stops growing
            for _ in range(30):
                candidate = objective(beta + step)
                if candidate <= current + 1e-12 * abs(current):
                    break
                step = step / 2
            beta = beta + step
            current = candidate
            if np.max(np.abs(step)) < self.tol:
                break
        self.beta = beta
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self._design(X) @ self.beta)


class VotedPerceptron:
    """Freund-Schapire voted perceptron (linear kernel) over a fixed data order.

    Each perceptron's vote weight is the number of examples it classified
    correctly before its first mistake. The score maps the weighted vote
    average from [-1, 1] onto [0, 1].
    """

    def __init__(self, epochs: int = 10):
        self.epochs = epochs

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> VotedPerceptron:
        Xb = np.hstack([X, np.ones((X.shape[0], 1))]).tolist()
        targets = np.where(y, 1.0, -1.0).tolist()
        width = len(Xb[0])
        v = [0.0] * width
        survival = 0
        vectors: list[list[float]] = []
        counts: list[int] = []
        for _ in range(self.epochs):
            for x, t in zip(Xb, targets):
                margin = t * sum(a * b for a, b in zip(v, x))
                if margin > 0:
                    survival += 1
                    continue
                if survival:
                    vectors.append(v)
                    counts.append(survival)
                v = [a + t * b for a, b in zip(v, x)]
                survival = 1
        if survival:
            vectors.append(v)
            counts.append(survival)
        self.vectors = np.array(vectors, dtype=float).reshape(len(vectors), width)
        self.counts = np.array(counts, dtype=float)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Xb = np.hstack([X, np.ones((X.shape[0], 1))])
        total = self.counts.sum()
        if total == 0:
            return np.full(X.shape[0], 0.5)
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], 256):
            block = Xb[start:start + 256]
            votes = np.sign(block @ self.vectors.T) @ self.counts
            out[start:start + 256] = votes / total
        return np.clip((1.0 + out) / 2.0, 0.0, 1.0)
