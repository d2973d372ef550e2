"""Fully connected network regressor: three ReLU hidden layers trained by
seeded mini-batch gradient descent on mean squared error. The target is
standardized internally and mapped back at prediction time."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


class DenseNet:
    def __init__(self, layers=(128, 64, 32), learning_rate=1e-3, epochs=200,
                 batch=32, seed=0):
        self.layers = tuple(int(w) for w in layers)
        self.learning_rate = learning_rate
        self.epochs = int(epochs)
        self.batch = int(batch)
        self.seed = seed
        self.weights = []
        self.biases = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, m = X.shape
        if n < 2:
            raise TrainingError("dense net needs at least 2 samples")
        rng = np.random.default_rng(self.seed)
        self._y_mean = float(y.mean())
        self._y_std = float(y.std()) or 1.0
        t = (y - self._y_mean) / self._y_std

        dims = [m] + list(self.layers) + [1]
        self.weights = [rng.normal(0.0, np.sqrt(2.0 / dims[i]), (dims[i], dims[i + 1]))
                        for i in range(len(dims) - 1)]
        # zero output head: the net starts at the target mean and a constant
        # target stays fitted exactly
        self.weights[-1][:] = 0.0
        self.biases = [np.zeros(d) for d in dims[1:]]

        for _epoch in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch):
                rows = order[start:start + self.batch]
                self._step(X[rows], t[rows])
        return self

    def _step(self, Xb, tb):
        acts = [Xb]
        z_list = []
        a = Xb
        for W, b in zip(self.weights, self.biases):
            z = a @ W + b
            z_list.append(z)
            a = np.maximum(z, 0.0) if W is not self.weights[-1] else z
            acts.append(a)
        pred = acts[-1][:, 0]
        grad = (2.0 / len(tb)) * (pred - tb)[:, None]
        for li in range(len(self.weights) - 1, -1, -1):
            a_prev = acts[li]
            gW = a_prev.T @ grad
            gb = grad.sum(axis=0)
            if li > 0:
                grad = (grad @ self.weights[li].T) * (z_list[li - 1] > 0)
            self.weights[li] -= self.learning_rate * gW
            self.biases[li] -= self.learning_rate * gb

    def predict(self, X):
        a = np.asarray(X, dtype=float)
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = np.maximum(z, 0.0) if i < len(self.weights) - 1 else z
        return a[:, 0] * self._y_std + self._y_mean

    def get_params(self):
        return {"layers": list(self.layers),
                "weights": [W.tolist() for W in self.weights],
                "biases": [b.tolist() for b in self.biases],
                "y_mean": self._y_mean, "y_std": self._y_std}
