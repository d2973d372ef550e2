"""Labelled datasets and training-set composition.

The semi-supervised mix is realized as set composition: a fraction a of the
training rows carries pseudo-labels (source SVI) and the rest carries
reference heights (source RAW). A building never appears twice; when both
label kinds exist for one building, the RAW label wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import AvailabilityError, ContractError, InputError

RAW = "RAW"
SVI = "SVI"


@dataclass
class LabeledDataset:
    building_ids: list
    X: np.ndarray
    y: np.ndarray
    source: list
    manifest_hash: str = ""

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if not (len(self.building_ids) == self.X.shape[0] == self.y.shape[0]
                == len(self.source)):
            raise InputError("dataset rows, labels, and sources must align")
        if np.any(self.y <= 0):
            raise InputError("heights must be positive")

    def __len__(self):
        return self.X.shape[0]

    def subset(self, indices) -> "LabeledDataset":
        idx = list(indices)
        return LabeledDataset([self.building_ids[i] for i in idx],
                              self.X[idx], self.y[idx],
                              [self.source[i] for i in idx], self.manifest_hash)

    @classmethod
    def from_matrix(cls, matrix, heights: dict, source: str) -> "LabeledDataset":
        """Rows of a FeatureMatrix for the buildings present in heights."""
        ids = [bid for bid in matrix.building_ids if bid in heights]
        X = matrix.rows_for(ids)
        y = np.array([heights[b] for b in ids], dtype=float)
        return cls(ids, X, y, [source] * len(ids), matrix.manifest_hash)


@dataclass(frozen=True)
class TrainingMix:
    a: float        # pseudo-label ratio in [0, 1]
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0):
            raise InputError(f"mix ratio must be in [0, 1], got {self.a}")


def assemble_training_set(raw: LabeledDataset, pseudo: LabeledDataset,
                          mix: TrainingMix, target_size: int | None = None
                          ) -> LabeledDataset:
    """Compose a training set with round(a*n) pseudo-labelled rows.

    Rows are sampled without replacement under the mix seed. Without a
    target size, n is the largest size both pools can serve at the requested
    ratio. Raises AvailabilityError (listing the shortfall) when a pool is
    too small.
    """
    if raw.manifest_hash != pseudo.manifest_hash:
        raise ContractError("training pools were built against different manifests")
    a = mix.a
    if target_size is None:
        if a == 0.0:
            n = len(raw)
        elif a == 1.0:
            n = len(pseudo)
        else:
            n = min(int(len(raw) / (1.0 - a)), int(len(pseudo) / a))
    else:
        n = int(target_size)
    n_svi = round(a * n)
    n_raw = n - n_svi

    rng = np.random.default_rng(mix.seed)
    if n_raw > len(raw):
        raise AvailabilityError(
            f"need {n_raw} RAW rows, have {len(raw)} (short {n_raw - len(raw)})")
    raw_order = rng.permutation(len(raw))[:n_raw]
    raw_part = raw.subset(sorted(raw_order))
    taken = set(raw_part.building_ids)

    candidates = [i for i, bid in enumerate(pseudo.building_ids) if bid not in taken]
    if n_svi > len(candidates):
        raise AvailabilityError(
            f"need {n_svi} pseudo rows, have {len(candidates)} not overlapping "
            f"RAW (short {n_svi - len(candidates)})")
    svi_order = rng.permutation(len(candidates))[:n_svi]
    svi_part = pseudo.subset(sorted(candidates[i] for i in svi_order))

    return LabeledDataset(raw_part.building_ids + svi_part.building_ids,
                          np.vstack([raw_part.X, svi_part.X]),
                          np.concatenate([raw_part.y, svi_part.y]),
                          [RAW] * len(raw_part) + [SVI] * len(svi_part),
                          raw.manifest_hash)


def split(d: LabeledDataset, ratio: float = 0.7, seed: int = 0):
    """Deterministic shuffled train/test split."""
    if len(d) < 10:
        raise InputError(f"need at least 10 rows to split, have {len(d)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(d))
    n_train = int(round(ratio * len(d)))
    return d.subset(order[:n_train]), d.subset(order[n_train:])
