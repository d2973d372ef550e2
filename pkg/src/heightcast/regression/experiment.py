"""Experiment runner: trains each configured model kind on each training-set
variant (RAW reference labels, SVI pseudo-labels, SSL mix) and reports
MAE / RMSE / R2 against a held-out validation set.

Two protocols:
  holdout - validation buildings are drawn first (or pinned via
            validation_ids); training pools never overlap them.
  split   - a single RAW dataset is split train/test by split_ratio.
Everything is driven by the seed list; a report is reproducible from its
config alone.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field

import numpy as np

from ..errors import AvailabilityError, InputError
from .data import RAW, SVI, LabeledDataset, TrainingMix, assemble_training_set, split
from .metrics import evaluate
from .models import MODEL_KINDS, predict, train


@dataclass
class ExperimentConfig:
    kinds: list = field(default_factory=lambda: ["random_forest"])
    hyperparameters: dict = field(default_factory=dict)
    sets: list = field(default_factory=lambda: [RAW, SVI, "SSL"])
    mix_a: float = 0.5
    seeds: list = field(default_factory=lambda: [0])
    protocol: str = "holdout"          # holdout | split
    split_ratio: float = 0.7
    n_raw: int | None = None           # RAW training budget (default: pseudo size)
    n_svi: int | None = None           # SVI training budget (default: n_raw)
    n_validation: int = 2000
    validation_ids: list | None = None
    feature_levels: list | None = None  # e.g. ["building"]; None = all columns

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        cfg = cls()
        for key, value in d.items():
            if key == "mix":
                cfg.mix_a = float(value.get("a", cfg.mix_a))
            elif hasattr(cfg, key):
                setattr(cfg, key, value)
            else:
                raise InputError(f"unknown experiment config key: {key}")
        for kind in cfg.kinds:
            if kind not in MODEL_KINDS:
                raise InputError(f"unknown model kind: {kind}")
        bad = set(cfg.sets) - {RAW, SVI, "SSL"}
        if bad:
            raise InputError(f"unknown training sets: {sorted(bad)}")
        return cfg

    def to_dict(self):
        return {
            "kinds": self.kinds, "hyperparameters": self.hyperparameters,
            "sets": self.sets, "mix": {"a": self.mix_a}, "seeds": self.seeds,
            "protocol": self.protocol, "split_ratio": self.split_ratio,
            "n_raw": self.n_raw, "n_svi": self.n_svi,
            "n_validation": self.n_validation,
            "validation_ids": self.validation_ids,
            "feature_levels": self.feature_levels,
        }


def _column_mask(manifest, levels):
    if not levels:
        return None
    keep = [i for i, e in enumerate(manifest.entries) if e.level in levels]
    if not keep:
        raise InputError(f"no manifest columns at levels {levels}")
    return keep


def _mask_dataset(ds: LabeledDataset, mask) -> LabeledDataset:
    if mask is None:
        return ds
    return LabeledDataset(ds.building_ids, ds.X[:, mask], ds.y, ds.source,
                          ds.manifest_hash)


def _sample(ids, k, rng):
    ids = sorted(ids)
    if k is None or k >= len(ids):
        return ids
    order = rng.permutation(len(ids))[:k]
    return [ids[i] for i in sorted(order)]


def run_experiment(matrix, truth: dict, pseudo: dict,
                   config: ExperimentConfig) -> dict:
    """Returns {"config", "rows", "medians"}; see the module docstring for
    the sampling protocol."""
    known = set(matrix.building_ids)
    truth = {b: h for b, h in truth.items() if b in known}
    pseudo = {b: h for b, h in pseudo.items() if b in known}
    mask = (_column_mask(matrix.manifest, config.feature_levels)
            if config.feature_levels else None)
    rows = []

    for seed in config.seeds:
        rng = np.random.default_rng(seed)
        variants = {}
        if config.protocol == "holdout":
            # image-labelled buildings are fixed by data availability, so they
            # are drawn first; validation comes from the remaining reference
            # buildings; RAW training ids from whatever is left. All three are
            # disjoint, so the SSL merge is exactly n_raw + n_svi rows.
            n_svi = (config.n_svi if config.n_svi is not None
                     else (config.n_raw if config.n_raw is not None else len(pseudo)))
            svi_ids = _sample(pseudo, n_svi, rng)
            svi_set = set(svi_ids)
            svi_ds = LabeledDataset.from_matrix(matrix, {b: pseudo[b] for b in svi_ids}, SVI)
            if config.validation_ids:
                val_ids = list(config.validation_ids)
            else:
                val_ids = _sample([b for b in truth if b not in svi_set],
                                  config.n_validation, rng)
            val_set = set(val_ids)
            raw_pool = [b for b in truth if b not in val_set and b not in svi_set]
            n_raw = config.n_raw if config.n_raw is not None else len(svi_ds)
            raw_ids = _sample(raw_pool, n_raw, rng)
            raw_ds = LabeledDataset.from_matrix(matrix, {b: truth[b] for b in raw_ids}, RAW)
            if len(raw_ds) == 0 or (("SVI" in config.sets or "SSL" in config.sets)
                                    and len(svi_ds) == 0):
                raise AvailabilityError("not enough labelled rows for the requested sets")
            X_val = matrix.rows_for(val_ids)
            y_val = np.array([truth[b] for b in val_ids])
            for name in config.sets:
                if name == RAW:
                    variants[name] = (raw_ds, X_val, y_val)
                elif name == SVI:
                    variants[name] = (svi_ds, X_val, y_val)
                else:
                    ssl = assemble_training_set(raw_ds, svi_ds,
                                                TrainingMix(config.mix_a, seed),
                                                target_size=len(raw_ds) + len(svi_ds))
                    variants[name] = (ssl, X_val, y_val)
        elif config.protocol == "split":
            raw_ids = _sample(truth, config.n_raw, rng)
            ds = LabeledDataset.from_matrix(matrix, {b: truth[b] for b in raw_ids}, RAW)
            train_ds, test_ds = split(ds, config.split_ratio, seed)
            for name in config.sets:
                if name != RAW:
                    raise InputError("protocol 'split' only supports the RAW set")
                variants[name] = (train_ds, test_ds.X, test_ds.y)
        else:
            raise InputError(f"unknown protocol: {config.protocol}")

        for kind in config.kinds:
            hyper = config.hyperparameters.get(kind)
            for set_name, (train_ds, X_val, y_val) in variants.items():
                model = train(kind, _mask_dataset(train_ds, mask), hyper, seed)
                pred = predict(model, X_val[:, mask] if mask is not None else X_val,
                               manifest_hash=train_ds.manifest_hash or None)
                m = evaluate(pred, y_val)
                rows.append({
                    "kind": kind, "set": set_name, "seed": seed,
                    "solver": model.solver,
                    "feature_levels": ",".join(config.feature_levels or []) or "all",
                    "n_train": len(train_ds), "n_validation": len(y_val),
                    "mae": m.mae, "rmse": m.rmse, "r2": m.r2,
                })

    medians = {}
    for kind in config.kinds:
        for set_name in config.sets:
            maes = [r["mae"] for r in rows
                    if r["kind"] == kind and r["set"] == set_name]
            if maes:
                medians[f"{kind}/{set_name}"] = statistics.median(maes)
    return {"config": config.to_dict(), "rows": rows, "medians": medians}


REPORT_COLUMNS = ("kind", "set", "seed", "solver", "feature_levels",
                  "n_train", "n_validation", "mae", "rmse", "r2")


def write_report_csv(report: dict, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in report["rows"]:
            writer.writerow([row[c] if c in ("kind", "set", "solver", "feature_levels")
                             else repr(row[c]) if isinstance(row[c], float)
                             else row[c] for c in REPORT_COLUMNS])


def write_report_json(report: dict, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
