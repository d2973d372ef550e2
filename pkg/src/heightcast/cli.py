"""Command-line pipeline driver.

Subcommands map to the workflow stages: synth, features, align, floors,
train, evaluate, build-lod1, and pipeline (everything end to end). Every
stage writes its data outputs deterministically plus a run manifest
(<stage>_run_manifest.json) with input hashes, the config hash, and
timings; the run manifest is diagnostic and the only non-reproducible file.

Exit codes: 0 ok, 2 input error, 3 contract error, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import floors as fl
from . import lod1, svi, synth
from .errors import ContractError, HeightcastError, InputError
from .geodata import (GeoPoint, LocalProjection, build_spatial_index,
                      load_buildings, load_streets)
from .morphometry import (FeatureManifest, FeatureMatrix, MorphometryConfig,
                          assemble_matrix)
from .regression import experiment as exp
from .regression import models as reg_models
from .regression.data import LabeledDataset

VERSION = "0.1.0"
ENV_PREFIX = "HEIGHTCAST_"

DEFAULT_PIPELINE_CONFIG = {
    "paths": {
        "buildings": "buildings.geojson",
        "streets": "streets.geojson",
        "cameras": "cameras.jsonl",
        "detections": "detections.jsonl",
        "raw_labels": "truth.csv",
        "allowlist": None,
        "out_dir": "out",
    },
    "morphometry": {"buffers": [50, 200, 500], "local_closeness_radius_m": 400.0,
                    "default_street_width_m": 6.0, "workers": 1},
    "svi": {"max_range_m": 100.0},
    "floors": {"min_confidence": 0.5},
    "regression": {"kinds": ["random_forest"],
                   "hyperparameters": {"random_forest": {"n_trees": 100, "min_leaf": 5}},
                   "sets": ["RAW", "SVI", "SSL"], "mix": {"a": 0.5},
                   "seeds": [0], "n_validation": 2000},
    "lod1": {"format": "cityjson", "min_height_m": 2.5, "heights": "predicted"},
    "final": {"kind": None, "set": "SSL"},
    "seed": 0,
}


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_run_manifest(out_dir: Path, stage: str, inputs: dict, config: dict,
                       started: float):
    manifest = {
        "stage": stage,
        "version": VERSION,
        "inputs": {name: {"path": str(p), "sha256": sha256_file(p)}
                   for name, p in inputs.items() if p and Path(p).exists()},
        "config_hash": hashlib.sha256(
            json.dumps(config, sort_keys=True, default=str).encode()).hexdigest(),
        "duration_s": round(time.time() - started, 3),
    }
    path = out_dir / f"{stage}_run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def projection_for_buildings_file(path) -> LocalProjection:
    """Deterministic local projection centred on the mean building vertex."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    lons, lats = [], []
    for feature in data.get("features", []):
        geom = feature.get("geometry") or {}
        gtype = geom.get("type")
        polys = geom.get("coordinates") or []
        if gtype == "Polygon":
            polys = [polys]
        elif gtype != "MultiPolygon":
            continue
        for rings in polys:
            for ring in rings:
                for lon, lat in ring:
                    lons.append(float(lon))
                    lats.append(float(lat))
    if not lons:
        raise InputError(f"{path}: no polygon coordinates to centre a projection on")
    return LocalProjection(GeoPoint(sum(lons) / len(lons), sum(lats) / len(lats)))


def read_heights_csv(path) -> dict:
    """building_id -> height from any CSV with those two columns."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if not {"building_id", "height_m"} <= set(reader.fieldnames or ()):
                raise InputError(f"{path}: need building_id and height_m columns")
            return {row["building_id"]: float(row["height_m"]) for row in reader}
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def write_heights_csv(heights: dict, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["building_id", "height_m"])
        for bid in sorted(heights):
            writer.writerow([bid, repr(float(heights[bid]))])


def _load_scene(buildings_path, streets_path=None):
    projection = projection_for_buildings_file(buildings_path)
    footprints, b_report = load_buildings(buildings_path, projection)
    if not footprints:
        raise InputError(f"{buildings_path}: no usable footprints")
    net = None
    s_report = None
    if streets_path:
        net, s_report = load_streets(streets_path, projection)
    return projection, footprints, b_report, net, s_report


# ---------------------------------------------------------------------------
# stages

def cmd_synth(args):
    started = time.time()
    out = Path(args.out)
    spec = synth.SyntheticCitySpec(
        blocks=args.blocks, buildings_per_block=args.per_block, seed=args.seed,
        noise_sigma=args.noise_sigma, flip_probability=args.flip_prob,
        svi_fraction=args.svi_fraction, block_area_coeff=args.block_area_coeff,
        row_jitter=args.row_jitter)
    city = synth.generate_synthetic_city(spec)
    paths = synth.write_city_files(city, out)
    write_run_manifest(out, "synth", {}, vars(args), started)
    print(f"synth: {len(city.footprints)} buildings, {len(city.segments)} streets, "
          f"{len(city.mapillary_records)} images -> {out}")
    return 0


def _morph_config(args) -> MorphometryConfig:
    buffers = tuple(float(b) for b in args.buffers.split(","))
    return MorphometryConfig(buffers=buffers,
                             local_closeness_radius_m=args.closeness_radius,
                             default_street_width_m=args.street_width,
                             workers=args.workers)


def cmd_features(args):
    started = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _morph_config(args)
    _proj, footprints, b_report, net, s_report = _load_scene(args.buildings, args.streets)
    matrix = assemble_matrix(footprints, net, config)
    matrix.write_csv(out / "features.csv")
    matrix.write_manifest_json(out / "manifest.json")
    (out / "load_report.json").write_text(json.dumps(
        {"buildings": b_report.to_dict(), "streets": s_report.to_dict()},
        indent=2, sort_keys=True) + "\n")
    write_run_manifest(out, "features",
                       {"buildings": args.buildings, "streets": args.streets},
                       vars(args), started)
    print(f"features: {matrix.values.shape[0]} buildings x "
          f"{matrix.values.shape[1]} features -> {out / 'features.csv'}")
    return 0


def cmd_align(args):
    started = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    projection, footprints, _b, _net, _s = _load_scene(args.buildings)
    index = build_spatial_index(footprints)
    allowlist = None
    if args.allowlist:
        allowlist = {line.strip() for line in Path(args.allowlist).read_text().splitlines()
                     if line.strip()}
    cameras, skipped = svi.read_camera_records(args.cameras, projection, allowlist)
    assignments, report = svi.align_cameras(cameras, footprints, index,
                                            max_range=args.max_range_m)
    svi.write_assignments_csv(assignments, out / "assignments.csv")
    report["parse_skipped"] = skipped
    (out / "align_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_run_manifest(out, "align",
                       {"buildings": args.buildings, "cameras": args.cameras},
                       vars(args), started)
    print(f"align: {report['assigned']}/{report['parsed']} images assigned "
          f"-> {out / 'assignments.csv'}")
    return 0


def read_assignments_csv(path):
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(svi.Assignment(row["image_id"], row["building_id"],
                                      (0.0, 0.0), float(row["hit_distance_m"])))
    return out


def cmd_floors(args):
    started = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _proj, footprints, _b, _net, _s = _load_scene(args.buildings)
    assignments = read_assignments_csv(args.assignments)
    detections = fl.read_detections_jsonl(args.detections)
    by_id = {fp.id: fp for fp in footprints}
    labels, report = fl.make_pseudo_labels(assignments, detections, by_id,
                                           min_confidence=args.min_confidence)
    counts = {}
    for a in assignments:
        counts[a.building_id] = counts.get(a.building_id, 0) + 1
    fl.write_pseudo_labels_csv(labels, counts, out / "pseudo_labels.csv")
    (out / "floors_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_run_manifest(out, "floors",
                       {"assignments": args.assignments, "detections": args.detections},
                       vars(args), started)
    print(f"floors: {len(labels)} pseudo-labels -> {out / 'pseudo_labels.csv'}")
    return 0


def read_pseudo_labels_csv(path) -> dict:
    with open(path, newline="") as fh:
        return {row["building_id"]: float(row["height_m"])
                for row in csv.DictReader(fh)}


def _load_matrix(features_path, manifest_path) -> FeatureMatrix:
    try:
        raw = json.loads(Path(manifest_path).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read manifest {manifest_path}: {exc}") from exc
    from .morphometry.manifest import ManifestEntry
    manifest = FeatureManifest(raw["version"], tuple(
        ManifestEntry(e["name"], e["level"], e["base_feature"], e["buffer_m"],
                      e["aggregator"]) for e in raw["entries"]))
    if manifest.hash() != raw["hash"]:
        raise ContractError(f"{manifest_path}: stored hash does not match entries")
    return FeatureMatrix.read_csv(features_path, manifest)


def cmd_train(args):
    started = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    matrix = _load_matrix(args.features, args.manifest)
    truth = read_heights_csv(args.truth)
    pseudo = read_pseudo_labels_csv(args.labels) if args.labels else {}
    try:
        cfg_raw = json.loads(Path(args.config).read_text()) if args.config else {}
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read experiment config: {exc}") from exc
    config = exp.ExperimentConfig.from_dict(cfg_raw)
    report = exp.run_experiment(matrix, truth, pseudo, config)
    exp.write_report_csv(report, out / "report.csv")
    exp.write_report_json(report, out / "report.json")

    if args.predict_all:
        final_kind = args.final_kind or config.kinds[0]
        final_set = args.final_set
        if final_set not in config.sets:
            final_set = config.sets[0]
        model = _fit_final_model(matrix, truth, pseudo, config, final_kind, final_set)
        pred = reg_models.predict(model, matrix.values,
                                  manifest_hash=matrix.manifest_hash)
        write_heights_csv(dict(zip(matrix.building_ids, pred)),
                          out / "predictions.csv")
        reg_models.save_model(model, out / ("model.npz" if final_kind == "random_forest"
                                            else "model.json"))
    write_run_manifest(out, "train",
                       {"features": args.features, "truth": args.truth,
                        "labels": args.labels, "config": args.config},
                       vars(args), started)
    print(f"train: {len(report['rows'])} result rows -> {out / 'report.csv'}")
    return 0


def _fit_final_model(matrix, truth, pseudo, config, kind, set_name):
    """Fit the deployment model on all available labels of the chosen set."""
    from .regression.data import RAW, SVI, TrainingMix, assemble_training_set
    seed = config.seeds[0]
    raw_ds = LabeledDataset.from_matrix(matrix, truth, RAW)
    svi_ds = LabeledDataset.from_matrix(
        matrix, {b: h for b, h in pseudo.items() if b not in truth}, SVI)
    if set_name == RAW or (set_name == "SSL" and len(svi_ds) == 0):
        ds = raw_ds
    elif set_name == SVI:
        ds = svi_ds
    else:
        ds = assemble_training_set(raw_ds, svi_ds, TrainingMix(config.mix_a, seed),
                                   target_size=None)
    return reg_models.train(kind, ds, config.hyperparameters.get(kind), seed)


def cmd_evaluate(args):
    started = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pred = read_heights_csv(args.pred)
    truth = read_heights_csv(args.truth)
    shared = sorted(set(pred) & set(truth))
    if len(shared) < 2:
        raise InputError("fewer than 2 buildings shared between prediction and truth")
    from .regression.metrics import evaluate as eval_metrics
    m = eval_metrics([pred[b] for b in shared], [truth[b] for b in shared])
    result = {"n": len(shared), **m.to_dict()}
    (out / "metrics.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    write_run_manifest(out, "evaluate", {"pred": args.pred, "truth": args.truth},
                       vars(args), started)
    print(f"evaluate: n={result['n']} mae={m.mae:.3f} rmse={m.rmse:.3f} "
          f"r2={m.r2:.4f} -> {out / 'metrics.json'}")
    return 0


def cmd_build_lod1(args):
    started = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    projection, footprints, _b, _net, _s = _load_scene(args.buildings)
    heights = read_heights_csv(args.heights)
    metadata = {
        "crs": {"kind": "local-azimuthal-equidistant",
                "origin": {"lon": projection.origin.lon, "lat": projection.origin.lat}},
        "generation": {"min_height_m": args.min_height_m, "format": args.format,
                       "version": VERSION},
    }
    model = lod1.build_model(footprints, heights, metadata,
                             min_height=args.min_height_m)
    if not model.solids:
        raise InputError("no buildings with height entries to extrude")
    if args.format == "cityjson":
        path = out / "city.json"
        lod1.export_cityjson(model, path)
    else:
        path = out / "city.obj"
        lod1.export_obj(model, path)
    write_run_manifest(out, "build_lod1",
                       {"buildings": args.buildings, "heights": args.heights},
                       vars(args), started)
    print(f"build-lod1: {len(model.solids)} solids -> {path}")
    return 0


def _merge_config(defaults: dict, override: dict) -> dict:
    merged = {}
    for key, value in defaults.items():
        if key == "regression":
            # whole section validated later by ExperimentConfig.from_dict
            merged[key] = {**value, **(override.get(key) or {})}
        elif isinstance(value, dict):
            merged[key] = _merge_config(value, override.get(key, {}) or {})
        else:
            merged[key] = override.get(key, value)
    for key in override or {}:
        if key not in merged:
            raise InputError(f"unknown pipeline config key: {key}")
    return merged


def _apply_env_overrides(config: dict):
    if ENV_PREFIX + "SEED" in os.environ:
        config["seed"] = int(os.environ[ENV_PREFIX + "SEED"])
    if ENV_PREFIX + "OUT_DIR" in os.environ:
        config["paths"]["out_dir"] = os.environ[ENV_PREFIX + "OUT_DIR"]
    return config


def cmd_pipeline(args):
    started = time.time()
    try:
        user_cfg = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read pipeline config: {exc}") from exc
    config = _apply_env_overrides(_merge_config(DEFAULT_PIPELINE_CONFIG, user_cfg))
    paths = config["paths"]
    out = Path(paths["out_dir"])
    out.mkdir(parents=True, exist_ok=True)

    morph = config["morphometry"]
    ns = argparse.Namespace(
        buildings=paths["buildings"], streets=paths["streets"], out=str(out),
        buffers=",".join(str(b) for b in morph["buffers"]),
        closeness_radius=morph["local_closeness_radius_m"],
        street_width=morph["default_street_width_m"], workers=morph["workers"])
    cmd_features(ns)

    ns = argparse.Namespace(buildings=paths["buildings"], cameras=paths["cameras"],
                            out=str(out), max_range_m=config["svi"]["max_range_m"],
                            allowlist=paths.get("allowlist"))
    cmd_align(ns)

    ns = argparse.Namespace(buildings=paths["buildings"],
                            assignments=str(out / "assignments.csv"),
                            detections=paths["detections"], out=str(out),
                            min_confidence=config["floors"]["min_confidence"])
    cmd_floors(ns)

    exp_cfg = dict(config["regression"])
    exp_path = out / "experiment_config.json"
    exp_path.write_text(json.dumps(exp_cfg, indent=2, sort_keys=True) + "\n")
    ns = argparse.Namespace(features=str(out / "features.csv"),
                            manifest=str(out / "manifest.json"),
                            truth=paths["raw_labels"],
                            labels=str(out / "pseudo_labels.csv"),
                            config=str(exp_path), out=str(out), predict_all=True,
                            final_kind=config["final"]["kind"],
                            final_set=config["final"]["set"])
    cmd_train(ns)

    heights_file = (out / "predictions.csv" if config["lod1"]["heights"] == "predicted"
                    else out / "pseudo_labels.csv")
    ns = argparse.Namespace(buildings=paths["buildings"], heights=str(heights_file),
                            out=str(out), format=config["lod1"]["format"],
                            min_height_m=config["lod1"]["min_height_m"])
    cmd_build_lod1(ns)

    write_run_manifest(out, "pipeline", {"config": args.config}, config, started)
    print(f"pipeline: complete -> {out}")
    return 0


def cmd_print_config(_args):
    print(json.dumps(DEFAULT_PIPELINE_CONFIG, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="heightcast",
                                description="Building heights from footprints and "
                                            "street-view pseudo-labels; LoD1 export.")
    p.add_argument("--version", action="version", version=VERSION)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic city")
    s.add_argument("--out", required=True)
    s.add_argument("--blocks", type=int, default=5)
    s.add_argument("--per-block", dest="per_block", type=int, default=4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=1.0)
    s.add_argument("--flip-prob", dest="flip_prob", type=float, default=0.0)
    s.add_argument("--svi-fraction", dest="svi_fraction", type=float, default=0.3)
    s.add_argument("--block-area-coeff", dest="block_area_coeff", type=float, default=0.0)
    s.add_argument("--row-jitter", dest="row_jitter", type=float, default=0.0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("features", help="compute the morphometric feature matrix")
    s.add_argument("--buildings", required=True)
    s.add_argument("--streets", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--buffers", default="50,200,500")
    s.add_argument("--closeness-radius", dest="closeness_radius", type=float, default=400.0)
    s.add_argument("--street-width", dest="street_width", type=float, default=6.0)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("align", help="assign street-view images to footprints")
    s.add_argument("--buildings", required=True)
    s.add_argument("--cameras", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--max-range-m", dest="max_range_m", type=float, default=100.0)
    s.add_argument("--allowlist", default=None)
    s.set_defaults(func=cmd_align)

    s = sub.add_parser("floors", help="floor counts and height pseudo-labels")
    s.add_argument("--buildings", required=True)
    s.add_argument("--assignments", required=True)
    s.add_argument("--detections", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--min-confidence", dest="min_confidence", type=float, default=0.5)
    s.set_defaults(func=cmd_floors)

    s = sub.add_parser("train", help="run the regression experiment grid")
    s.add_argument("--features", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--labels", default=None)
    s.add_argument("--config", default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--predict-all", dest="predict_all", action="store_true")
    s.add_argument("--final-kind", dest="final_kind", default=None)
    s.add_argument("--final-set", dest="final_set", default="SSL")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="compare predicted heights to reference")
    s.add_argument("--pred", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("build-lod1", help="extrude footprints into a city model")
    s.add_argument("--buildings", required=True)
    s.add_argument("--heights", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=["cityjson", "obj"], default="cityjson")
    s.add_argument("--min-height-m", dest="min_height_m", type=float, default=2.5)
    s.set_defaults(func=cmd_build_lod1)

    s = sub.add_parser("pipeline", help="run every stage from a config file")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("print-config", help="show the default pipeline config")
    s.set_defaults(func=cmd_print_config)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ContractError as exc:
        print(f"contract error: {exc}", file=sys.stderr)
        return 3
    except HeightcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
