"""RBF-kernel regressors: closed-form kernel ridge (default) and an
epsilon-insensitive SVR solved by sequential minimal optimization.

The SVR folds the bias into the kernel (K + 1), which removes the equality
constraint from the dual; the minimal working set is then a single dual
weight, optimized in deterministic cyclic sweeps.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


def rbf_kernel(A, B, gamma):
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
          - 2.0 * A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class KernelRidge:
    def __init__(self, gamma=None, lam=1.0):
        self.gamma = gamma
        self.lam = lam
        self.X_train = None
        self.alpha = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(y) < 2:
            raise TrainingError("kernel ridge needs at least 2 samples")
        gamma = self.gamma if self.gamma is not None else 1.0 / X.shape[1]
        # centre the target so the unpenalized offset is carried exactly
        self.y_offset = float(y.mean())
        K = rbf_kernel(X, X, gamma)
        self.alpha = np.linalg.solve(K + self.lam * np.eye(len(y)), y - self.y_offset)
        self.X_train = X
        self._gamma = gamma
        return self

    def predict(self, X):
        K = rbf_kernel(np.asarray(X, dtype=float), self.X_train, self._gamma)
        return K @ self.alpha + self.y_offset

    def get_params(self):
        return {"gamma": self._gamma, "lam": self.lam, "y_offset": self.y_offset,
                "alpha": self.alpha.tolist(), "X_train": self.X_train.tolist()}


class SVRSMO:
    """epsilon-SVR via coordinate-wise minimal optimization on the
    bias-augmented dual (box constraint |beta_i| <= C)."""

    def __init__(self, gamma=None, epsilon=0.1, C=10.0, max_sweeps=200, tol=1e-6):
        self.gamma = gamma
        self.epsilon = epsilon
        self.C = C
        self.max_sweeps = max_sweeps
        self.tol = tol

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = len(y)
        if n < 2:
            raise TrainingError("SVR needs at least 2 samples")
        gamma = self.gamma if self.gamma is not None else 1.0 / X.shape[1]
        self.y_offset = float(y.mean())
        y = y - self.y_offset
        K = rbf_kernel(X, X, gamma) + 1.0   # +1 absorbs the bias
        beta = np.zeros(n)
        f = np.zeros(n)                     # current predictions K beta
        for _sweep in range(self.max_sweeps):
            worst = 0.0
            for i in range(n):
                kii = K[i, i]
                if kii <= 0:
                    continue
                # residual excluding i's own contribution
                r = y[i] - (f[i] - K[i, i] * beta[i])
                # soft-threshold by epsilon, clip to the box
                if r > self.epsilon:
                    target = (r - self.epsilon) / kii
                elif r < -self.epsilon:
                    target = (r + self.epsilon) / kii
                else:
                    target = 0.0
                target = min(max(target, -self.C), self.C)
                delta = target - beta[i]
                if delta != 0.0:
                    beta[i] = target
                    f += delta * K[:, i]
                    worst = max(worst, abs(delta))
            if worst < self.tol:
                break
        self.beta = beta
        self.X_train = X
        self._gamma = gamma
        return self

    def predict(self, X):
        K = rbf_kernel(np.asarray(X, dtype=float), self.X_train, self._gamma) + 1.0
        return K @ self.beta + self.y_offset

    def get_params(self):
        return {"gamma": self._gamma, "epsilon": self.epsilon, "C": self.C,
                "y_offset": self.y_offset,
                "beta": self.beta.tolist(), "X_train": self.X_train.tolist()}
