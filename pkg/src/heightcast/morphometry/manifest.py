"""Feature manifest and matrix assembly.

The manifest is the source of truth for the feature roster: an ordered,
named column registry whose hash is embedded in every matrix so downstream
stages can refuse mismatched inputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from ..errors import FeatureError
from ..geodata import build_spatial_index
from . import features as ft

MANIFEST_VERSION = "1"


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    level: str          # building | street | block
    base_feature: str
    buffer_m: int       # 0 for first-order features
    aggregator: str     # none | total | mean | std | count

    def to_dict(self):
        return {"name": self.name, "level": self.level,
                "base_feature": self.base_feature, "buffer_m": self.buffer_m,
                "aggregator": self.aggregator}


@dataclass(frozen=True)
class FeatureManifest:
    version: str
    entries: tuple

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(names) != len(set(names)):
            raise FeatureError("manifest names must be unique")

    @property
    def names(self):
        return [e.name for e in self.entries]

    def hash(self) -> str:
        payload = json.dumps({"version": self.version,
                              "entries": [e.to_dict() for e in self.entries]},
                             sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_dict(self):
        return {"version": self.version, "hash": self.hash(),
                "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def for_config(cls, config: ft.MorphometryConfig) -> "FeatureManifest":
        entries = []

        def add(name, level, base, buffer_m=0, aggregator="none"):
            entries.append(ManifestEntry(name, level, base, int(buffer_m), aggregator))

        for name in ft.BUILDING_BASE_NAMES:
            add(name, "building", name)
        for buf in config.buffers:
            for base in ft.BUFFERED_BUILDING_FEATURES:
                for agg in ft.AGGREGATORS:
                    add(f"{base}_{agg}_{int(buf)}m", "building", base, buf, agg)

        for name in ft.STREET_BASE_NAMES:
            add(name, "street", name)
        for buf in config.buffers:
            b = int(buf)
            for base in ("segment_distance", "segment_length", "intersection_distance"):
                for agg in ft.AGGREGATORS:
                    add(f"{base}_{agg}_{b}m", "street", base, buf, agg)
            add(f"segment_count_{b}m", "street", "segment", buf, "count")
            add(f"intersection_count_{b}m", "street", "intersection", buf, "count")

        for name in ft.BLOCK_SHAPE_NAMES:
            add(name, "block", name)
        for name in ft.BLOCK_CONTAINMENT_NAMES:
            add(name, "block", name)
        for buf in config.buffers:
            b = int(buf)
            add(f"block_count_{b}m", "block", "block", buf, "count")
            for agg in ft.AGGREGATORS:
                add(f"block_area_{agg}_{b}m", "block", "block_area", buf, agg)
        widest = int(config.buffers[-1])
        add(f"block_corner_count_mean_{widest}m", "block", "block_corner_count", widest, "mean")
        add(f"block_corner_count_std_{widest}m", "block", "block_corner_count", widest, "std")

        return cls(MANIFEST_VERSION, tuple(entries))


@dataclass
class FeatureMatrix:
    building_ids: list
    values: np.ndarray
    manifest: FeatureManifest

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.building_ids), len(self.manifest.entries)):
            raise FeatureError(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.building_ids)} buildings x {len(self.manifest.entries)} features")

    @property
    def manifest_hash(self) -> str:
        return self.manifest.hash()

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.manifest.names.index(name)]

    def rows_for(self, ids) -> np.ndarray:
        pos = {bid: i for i, bid in enumerate(self.building_ids)}
        return self.values[[pos[b] for b in ids]]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["building_id"] + self.manifest.names)
            for bid, row in zip(self.building_ids, self.values):
                writer.writerow([bid] + [repr(float(v)) for v in row])

    def write_manifest_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.manifest.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read_csv(cls, path, manifest: FeatureManifest) -> "FeatureMatrix":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["building_id"] + manifest.names:
                raise FeatureError(f"{path}: header does not match the manifest")
            ids, rows = [], []
            for rec in reader:
                ids.append(rec[0])
                rows.append([float(v) for v in rec[1:]])
        return cls(ids, np.array(rows, dtype=float), manifest)


def assemble_matrix(footprints, net, config: ft.MorphometryConfig | None = None) -> FeatureMatrix:
    """Compute the full manifest-ordered feature matrix for a scene.

    Raises FeatureError (naming the first offending building) if any value
    comes out non-finite.
    """
    config = config or ft.MorphometryConfig()
    manifest = FeatureManifest.for_config(config)
    index = build_spatial_index(footprints)

    base = ft.all_building_base(footprints, index, config.workers)
    columns = dict(base)
    columns.update(ft.buffered_aggregates(base, footprints, index, config.buffers))

    street_base, ctx, _nearest = ft.all_street_base(footprints, net, config,
                                                    workers=config.workers)
    columns.update(street_base)
    columns.update(ft.street_buffered_aggregates(footprints, ctx, config.buffers))

    block_vals, blocks = ft.all_block_features(footprints, net)
    columns.update(block_vals)
    columns.update(ft.block_buffered_aggregates(footprints, blocks, config.buffers))

    matrix = np.column_stack([columns[name] for name in manifest.names])
    bad = np.argwhere(~np.isfinite(matrix))
    if bad.size:
        r, c = bad[0]
        raise FeatureError(
            f"non-finite value for building {footprints[r].id}, "
            f"feature {manifest.names[c]}")
    return FeatureMatrix([fp.id for fp in footprints], matrix, manifest)
