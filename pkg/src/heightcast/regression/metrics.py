"""Regression evaluation: MAE, RMSE, and the coefficient of determination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EvaluationError


@dataclass(frozen=True)
class Metrics:
    mae: float
    rmse: float
    r2: float

    def to_dict(self):
        return {"mae": self.mae, "rmse": self.rmse, "r2": self.r2}


def evaluate(pred, truth) -> Metrics:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise EvaluationError(
            f"length mismatch: {pred.shape} predictions vs {truth.shape} truths")
    if pred.size < 2:
        raise EvaluationError("need at least 2 samples to evaluate")
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        raise EvaluationError("truth values are all identical; r2 undefined")
    err = pred - truth
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err ** 2)))
    r2 = 1.0 - float(np.sum(err ** 2)) / ss_tot
    return Metrics(mae, rmse, r2)
