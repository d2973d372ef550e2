"""Model zoo: hyperparameter defaults, feature standardization, training
dispatch, prediction with the one-floor lower clip, and serialization.

Standardization statistics always come from the training rows and are
stored on the model; prediction never refits them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractError, InputError, TrainingError
from .dense import DenseNet
from .forest import RandomForest, RegressionTree
from .kernel import KernelRidge, SVRSMO
from .linear import LinearGD

MODEL_FORMAT_VERSION = "1"
MIN_PREDICTED_HEIGHT_M = 2.5   # one residential floor

MODEL_KINDS = ("linear_gd", "random_forest", "kernel_rbf", "dense_net")

DEFAULT_HYPERPARAMETERS = {
    "linear_gd": {"learning_rate": 0.1, "epochs": 500, "loss": "mse"},
    "random_forest": {"n_trees": 1000, "max_depth": None, "min_leaf": 1,
                      "feature_subsample": "third", "bootstrap": True},
    "kernel_rbf": {"gamma": None, "lam": 1.0,
                   "solver": "kernel_ridge_closed_form",
                   "epsilon": 0.1, "C": 10.0},
    "dense_net": {"layers": [128, 64, 32], "learning_rate": 1e-3,
                  "epochs": 200, "batch": 32},
}


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray   # per-feature std; constant columns carry scale 1

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"]), np.array(d["scale"]))


@dataclass
class TrainedModel:
    kind: str
    hyper: dict
    standardizer: Standardizer
    inner: object
    manifest_hash: str = ""
    solver: str = ""

    def predict(self, X):
        Z = self.standardizer.transform(X)
        raw = self.inner.predict(Z)
        return np.maximum(raw, MIN_PREDICTED_HEIGHT_M)

    def linear_coefficients(self):
        """(coef, intercept) mapped back to unstandardized feature space."""
        if self.kind != "linear_gd":
            raise InputError("coefficients are only defined for linear_gd")
        theta = np.asarray(self.inner.theta)
        coef = theta[:-1] / self.standardizer.scale
        intercept = float(theta[-1] - np.sum(theta[:-1] * self.standardizer.mean
                                             / self.standardizer.scale))
        return coef, intercept


def _merged_hyper(kind, hyper):
    if kind not in MODEL_KINDS:
        raise TrainingError(f"unknown model kind: {kind}")
    merged = dict(DEFAULT_HYPERPARAMETERS[kind])
    for key, value in (hyper or {}).items():
        if key not in merged:
            raise TrainingError(f"{kind}: unknown hyperparameter {key}")
        merged[key] = value
    return merged


def train(kind: str, dataset, hyper: dict | None = None, seed: int = 0) -> TrainedModel:
    """Fit one regressor kind on a LabeledDataset."""
    h = _merged_hyper(kind, hyper)
    X = np.asarray(dataset.X, dtype=float)
    y = np.asarray(dataset.y, dtype=float)
    if len(y) < 2:
        raise TrainingError(f"need at least 2 training rows, have {len(y)}")
    if np.all(np.ptp(X, axis=0) == 0) and len(y) > 1:
        raise TrainingError("degenerate training set: all feature rows identical")

    standardizer = Standardizer.fit(X)
    Z = standardizer.transform(X)
    solver = kind

    if kind == "linear_gd":
        inner = LinearGD(h["learning_rate"], h["epochs"], h["loss"]).fit(Z, y)
    elif kind == "random_forest":
        inner = RandomForest(h["n_trees"], h["max_depth"], h["min_leaf"],
                             h["feature_subsample"], h["bootstrap"], seed).fit(Z, y)
    elif kind == "kernel_rbf":
        solver = h["solver"]
        if solver == "kernel_ridge_closed_form":
            inner = KernelRidge(h["gamma"], h["lam"]).fit(Z, y)
        elif solver == "svr_smo":
            inner = SVRSMO(h["gamma"], h["epsilon"], h["C"]).fit(Z, y)
        else:
            raise TrainingError(f"kernel_rbf: unknown solver {solver}")
    else:
        inner = DenseNet(h["layers"], h["learning_rate"], h["epochs"],
                         h["batch"], seed).fit(Z, y)

    return TrainedModel(kind, h, standardizer, inner,
                        manifest_hash=getattr(dataset, "manifest_hash", ""),
                        solver=solver)


def predict(model: TrainedModel, X, manifest_hash: str | None = None):
    """Heights for feature rows; clipped below at one residential floor."""
    if manifest_hash is not None and model.manifest_hash \
            and manifest_hash != model.manifest_hash:
        raise ContractError("feature manifest does not match the trained model")
    return model.predict(X)


# ---------------------------------------------------------------------------
# serialization

def save_model(model: TrainedModel, path):
    """Linear/kernel/dense models as versioned JSON; forests as an npz dump."""
    path = Path(path)
    meta = {"format_version": MODEL_FORMAT_VERSION, "kind": model.kind,
            "hyper": model.hyper, "solver": model.solver,
            "manifest_hash": model.manifest_hash,
            "standardizer": model.standardizer.to_dict()}
    if model.kind == "random_forest":
        arrays = {}
        for t, tree in enumerate(model.inner.trees):
            arrays[f"t{t}_feature"] = tree.feature
            arrays[f"t{t}_threshold"] = tree.threshold
            arrays[f"t{t}_left"] = tree.left
            arrays[f"t{t}_right"] = tree.right
            arrays[f"t{t}_value"] = tree.value
        meta["n_trees"] = len(model.inner.trees)
        np.savez_compressed(path, meta=json.dumps(meta, sort_keys=True), **arrays)
    else:
        meta["params"] = model.inner.get_params()
        with open(path, "w") as fh:
            json.dump(meta, fh, sort_keys=True)
            fh.write("\n")


def load_model(path) -> TrainedModel:
    path = Path(path)
    if path.suffix == ".npz" or path.name.endswith(".npz"):
        blob = np.load(path, allow_pickle=False)
        meta = json.loads(str(blob["meta"]))
        forest = RandomForest(**{k: meta["hyper"][k] for k in
                                 ("n_trees", "max_depth", "min_leaf",
                                  "feature_subsample", "bootstrap")})
        forest.trees = []
        for t in range(meta["n_trees"]):
            tree = RegressionTree()
            tree.feature = blob[f"t{t}_feature"]
            tree.threshold = blob[f"t{t}_threshold"]
            tree.left = blob[f"t{t}_left"]
            tree.right = blob[f"t{t}_right"]
            tree.value = blob[f"t{t}_value"]
            forest.trees.append(tree)
        inner = forest
    else:
        with open(path) as fh:
            meta = json.load(fh)
        params = meta["params"]
        kind = meta["kind"]
        if kind == "linear_gd":
            inner = LinearGD(meta["hyper"]["learning_rate"],
                             meta["hyper"]["epochs"], meta["hyper"]["loss"])
            inner.theta = np.array(params["theta"])
        elif kind == "kernel_rbf":
            if meta["solver"] == "svr_smo":
                inner = SVRSMO(params["gamma"], params["epsilon"], params["C"])
                inner.beta = np.array(params["beta"])
            else:
                inner = KernelRidge(params["gamma"], params["lam"])
                inner.alpha = np.array(params["alpha"])
            inner.X_train = np.array(params["X_train"])
            inner._gamma = params["gamma"]
            inner.y_offset = params["y_offset"]
        elif kind == "dense_net":
            inner = DenseNet(params["layers"])
            inner.weights = [np.array(w) for w in params["weights"]]
            inner.biases = [np.array(b) for b in params["biases"]]
            inner._y_mean = params["y_mean"]
            inner._y_std = params["y_std"]
        else:
            raise InputError(f"cannot load model kind {meta.get('kind')}")
    return TrainedModel(meta["kind"], meta["hyper"],
                        Standardizer.from_dict(meta["standardizer"]), inner,
                        meta["manifest_hash"], meta["solver"])
