"""Linear height regressor fitted by full-batch gradient descent.

The learning rate halves whenever a step would increase the loss (the step
is then rejected), which makes the per-epoch loss trace non-increasing by
construction.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


class LinearGD:
    def __init__(self, learning_rate=0.1, epochs=500, loss="mse"):
        if loss not in ("mse", "mae"):
            raise TrainingError(f"unsupported loss: {loss}")
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.loss = loss
        self.theta = None        # (m + 1,), intercept last
        self.loss_trace = []

    def _loss(self, A, y, theta):
        r = A @ theta - y
        if self.loss == "mse":
            return float(np.mean(r * r))
        return float(np.mean(np.abs(r)))

    def _grad(self, A, y, theta):
        r = A @ theta - y
        if self.loss == "mse":
            return 2.0 / len(y) * (A.T @ r)
        return A.T @ np.sign(r) / len(y)

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        A = np.hstack([X, np.ones((X.shape[0], 1))])
        theta = np.zeros(A.shape[1])
        lr = self.learning_rate
        current = self._loss(A, y, theta)
        self.loss_trace = [current]
        for _ in range(self.epochs):
            candidate = theta - lr * self._grad(A, y, theta)
            cand_loss = self._loss(A, y, candidate)
            if cand_loss > current:
                lr *= 0.5   # reject the step; the trace stays flat
            else:
                theta = candidate
                current = cand_loss
            self.loss_trace.append(current)
        self.theta = theta
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return X @ self.theta[:-1] + self.theta[-1]

    def get_params(self):
        return {"theta": self.theta.tolist(), "loss_trace_len": len(self.loss_trace)}
