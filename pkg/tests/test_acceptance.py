"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
complete. The adapter-contract criterion (fixture fetch / passthrough) lives
in the detection adapter's own test suite under adapter/; everything here
runs without that component, using committed synthetic detections.
"""

import functools
import hashlib
import json
import math
import random
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from heightcast import floors as fl
from heightcast import lod1
from heightcast.cli import main as cli_main
from heightcast.geodata import (BuildingFunction, Footprint, StreetSegment,
                                build_network, build_spatial_index)
from heightcast.errors import InsideBuildingError
from heightcast.morphometry import MorphometryConfig, assemble_matrix
from heightcast.morphometry.blocks import assign_buildings, tessellate_blocks
from heightcast.regression import LabeledDataset, evaluate, train
from heightcast.regression.data import RAW
from heightcast.regression.experiment import ExperimentConfig, run_experiment
from heightcast.svi import (align_cameras, bearing_to_direction, cast_ray,
                            CameraRecord, parse_camera_metadata)
from heightcast.synth import (SyntheticCitySpec, generate_synthetic_city,
                              synth_detection_set)

import oracles
import oracle_matrix
from cityjson_schema import validate_cityjson


def criterion(num, name):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            started = time.monotonic()
            try:
                detail = fn(*args, **kwargs)
            except BaseException:
                print(f"[ACCEPTANCE] {num:>2} {name}: FAIL")
                raise
            elapsed = time.monotonic() - started
            print(f"[ACCEPTANCE] {num:>2} {name}: PASS"
                  f" ({detail + ', ' if detail else ''}{elapsed:.1f}s)")
        return run
    return wrap


# --------------------------------------------------------------------------
# shared scenes

@pytest.fixture(scope="module")
def small_city():
    city = generate_synthetic_city(SyntheticCitySpec(
        blocks=5, buildings_per_block=4, seed=1234, svi_fraction=0.3))
    return city


@pytest.fixture(scope="module")
def big_city():
    """~2900 buildings; heights are a strong linear signal over footprint
    area, block area, and distance to the block edge, plus N(0, 1) noise."""
    spec = SyntheticCitySpec(blocks=18, buildings_per_block=9, seed=42,
                             noise_sigma=1.0, flip_probability=0.2,
                             svi_fraction=0.12, area_coeff=0.03,
                             block_area_coeff=0.15, edge_coeff=0.5,
                             base_height=12.0)
    city = generate_synthetic_city(spec)
    matrix = assemble_matrix(city.footprints, city.network, MorphometryConfig())

    index = build_spatial_index(city.footprints)
    cams = [parse_camera_metadata(r, city.projection)
            for r in city.mapillary_records]
    assignments, _ = align_cameras(cams, city.footprints, index)
    dets = {d["image_id"]: fl.DetectionSet.from_dict(d) for d in city.detections}
    by_id = {fp.id: fp for fp in city.footprints}
    labels, _ = fl.make_pseudo_labels(assignments, dets, by_id)
    pseudo = {lab.building_id: lab.height for lab in labels}
    assert len(pseudo) >= 300
    return city, matrix, pseudo


RF_HYPER = {"random_forest": {"n_trees": 100, "min_leaf": 5}}


# --------------------------------------------------------------------------

@criterion(1, "morphometry oracle suite")
def test_c1_morphometry_oracle(small_city):
    started = time.monotonic()
    city = small_city
    net = city.network
    config = MorphometryConfig()
    matrix = assemble_matrix(city.footprints, net, config)
    assert matrix.values.shape == (len(city.footprints), 131)
    blocks = assign_buildings(tessellate_blocks(net), city.footprints)
    want = oracle_matrix.compute_matrix(city.footprints, net, blocks, config)
    mismatches = []
    for i, name in enumerate(matrix.manifest.names):
        got = matrix.values[:, i]
        if not np.allclose(got, want[name], rtol=1e-9, atol=1e-9):
            mismatches.append(name)
    assert not mismatches, f"features disagree with brute force: {mismatches}"
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"oracle suite took {elapsed:.1f}s (limit 30s)"
    return f"{len(city.footprints)} buildings x 131 features"


@criterion(2, "polygonization block counts")
def test_c2_polygonization():
    for k in range(2, 7):
        segs = []
        span = (k - 1) * 50.0
        for i in range(k):
            segs.append(StreetSegment(f"h{i}", [(0, i * 50.0), (span, i * 50.0)]))
            segs.append(StreetSegment(f"v{i}", [(i * 50.0, 0), (i * 50.0, span)]))
        blocks = tessellate_blocks(build_network(segs))
        assert len(blocks) == (k - 1) ** 2, f"k={k}: {len(blocks)} blocks"
    tree = build_network([
        StreetSegment("a", [(0, 0), (50, 0)]),
        StreetSegment("b", [(50, 0), (50, 40)]),
        StreetSegment("c", [(50, 0), (100, 10)]),
        StreetSegment("d", [(100, 10), (140, -20)]),
    ])
    assert tessellate_blocks(tree) == []
    return "k=2..6 grids and tree network"


@criterion(3, "ray casting oracle")
def test_c3_ray_casting():
    rng = random.Random(20240)
    checked = 0
    inside_checked = 0
    while checked < 1000:
        fps = []
        for i in range(rng.randint(1, 18)):
            x, y = rng.uniform(-60, 60), rng.uniform(-60, 60)
            w, h = rng.uniform(2, 14), rng.uniform(2, 14)
            ring = [(x, y), (x + w, y), (x + w, y + h), (x, y + h), (x, y)]
            fps.append(Footprint(f"b{i:02d}", ring, [], BuildingFunction.UNKNOWN, {}))
        index = build_spatial_index(fps)
        pos = (rng.uniform(-70, 70), rng.uniform(-70, 70))
        angle = rng.uniform(0, 360)
        inside = [f for f in fps
                  if oracles.point_in_polygon_crossings(pos, f.exterior)]
        cam = CameraRecord("img", pos, angle)
        if inside:
            with pytest.raises(InsideBuildingError):
                cast_ray(cam, fps, index, max_range=100.0)
            inside_checked += 1
            continue
        got = cast_ray(cam, fps, index, max_range=100.0)
        want = oracles.ray_hits_all_segments(pos, bearing_to_direction(angle),
                                             {f.id: [f.exterior] for f in fps})
        if want is None or want[1] > 100.0:
            assert got is None
        else:
            assert got is not None and got.building_id == want[0]
            assert got.hit_distance == pytest.approx(want[1], abs=1e-9)
        checked += 1
    # dedicated inside-camera sweep
    square = [(0, 0), (10, 0), (10, 10), (0, 10), (0, 0)]
    fps = [Footprint("solo", square, [], BuildingFunction.UNKNOWN, {})]
    index = build_spatial_index(fps)
    for _ in range(50):
        cam = CameraRecord("in", (rng.uniform(0.5, 9.5), rng.uniform(0.5, 9.5)),
                           rng.uniform(0, 360))
        with pytest.raises(InsideBuildingError):
            cast_ray(cam, fps, index)
        inside_checked += 1
    return f"1000 scenes, {inside_checked} inside-camera rejections"


@criterion(4, "floor estimation recovery")
def test_c4_floor_estimation():
    rng = np.random.default_rng(77)
    total = 0
    exact = 0
    for _ in range(500):
        floors = int(rng.integers(2, 9))
        raw = synth_detection_set(f"f{total}", floors, rng, jitter=0.2)
        est = fl.estimate_floors(fl.cluster_rows(fl.DetectionSet.from_dict(raw)), "b")
        total += 1
        exact += est.floors == floors
    rate = exact / total
    assert rate >= 0.95, f"exact floor recovery {rate:.3f} < 0.95"

    for i in range(100):
        floors = int(rng.integers(2, 9))
        raw = synth_detection_set(f"z{i}", floors, rng, jitter=0.0)
        est = fl.estimate_floors(fl.cluster_rows(fl.DetectionSet.from_dict(raw)), "b")
        assert est.floors == floors, "zero-jitter facade missed"

    for _ in range(300):
        n = int(rng.integers(2, 13))
        gaps = rng.uniform(0, 150, n)
        _thr, wcss = fl.two_means_split(gaps)
        o_wcss, _ = oracles.best_two_partition_wcss(gaps)
        assert wcss == pytest.approx(o_wcss, abs=1e-9)
    return f"jittered recovery {rate:.1%}"


@criterion(5, "floor-to-height constants")
def test_c5_height_conversion():
    assert fl.floors_to_height(4, BuildingFunction.RESIDENTIAL) == 10.0
    assert fl.floors_to_height(3, BuildingFunction.COMMERCIAL_PUBLIC) == 10.5
    return None


@criterion(6, "metrics hand values and RMSE >= MAE")
def test_c6_metrics():
    m = evaluate([12.0, 18.0], [10.0, 20.0])
    assert abs(m.mae - 2.0) < 1e-12
    assert abs(m.rmse - 2.0) < 1e-12
    assert abs(m.r2 - 0.84) < 1e-12
    m = evaluate([1.5, 3.5, 8.0], [1.0, 4.0, 8.0])
    hand_mae = (0.5 + 0.5 + 0.0) / 3
    hand_rmse = math.sqrt((0.25 + 0.25 + 0.0) / 3)
    ss_tot = sum((v - 13.0 / 3) ** 2 for v in (1.0, 4.0, 8.0))
    assert abs(m.mae - hand_mae) < 1e-12
    assert abs(m.rmse - hand_rmse) < 1e-12
    assert abs(m.r2 - (1 - 0.5 / ss_tot)) < 1e-12
    rng = np.random.default_rng(6)
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        truth = rng.normal(10, 4, n)
        pred = truth + rng.normal(0, 2, n)
        if np.ptp(truth) == 0:
            continue
        m = evaluate(pred, truth)
        assert m.rmse >= m.mae - 1e-12
    return None


@criterion(7, "linear regression recovery")
def test_c7_linear_recovery():
    rng = np.random.default_rng(7)
    X = rng.normal(3, 2, (200, 10))
    w = rng.uniform(-0.8, 0.8, 10)
    y = X @ w + 25.0
    ds = LabeledDataset([f"b{i}" for i in range(200)], X, y, [RAW] * 200, "h")
    model = train("linear_gd", ds, {"epochs": 5000})
    coef, intercept = model.linear_coefficients()
    o_coef, o_int = oracles.ols_fit(X, y)
    assert np.max(np.abs(coef - o_coef)) < 1e-3
    assert abs(intercept - o_int) < 1e-3
    trace = model.inner.loss_trace
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
    return "10 features, n=200, tol 1e-3"


@criterion(8, "semi-supervised benefit (RF)")
def test_c8_ssl_benefit(big_city):
    started = time.monotonic()
    city, matrix, pseudo = big_city
    cfg = ExperimentConfig.from_dict({
        "kinds": ["random_forest"], "hyperparameters": RF_HYPER,
        "sets": ["RAW", "SSL"], "mix": {"a": 0.5},
        "seeds": list(range(10)), "n_raw": 300, "n_svi": 300,
        "n_validation": 2000})
    report = run_experiment(matrix, city.truth, pseudo, cfg)
    raw = {r["seed"]: r["mae"] for r in report["rows"] if r["set"] == "RAW"}
    ssl = {r["seed"]: r["mae"] for r in report["rows"] if r["set"] == "SSL"}
    assert all(r["n_validation"] == 2000 for r in report["rows"])
    wins = sum(ssl[s] <= raw[s] for s in raw)
    med_raw = statistics.median(raw.values())
    med_ssl = statistics.median(ssl.values())
    assert med_ssl <= med_raw, f"median SSL {med_ssl:.3f} > RAW {med_raw:.3f}"
    assert wins >= 8, f"SSL won only {wins}/10 seeds"
    elapsed = time.monotonic() - started
    assert elapsed < 300.0, f"took {elapsed:.0f}s (limit 300s)"
    return (f"median MAE RAW {med_raw:.2f} -> SSL {med_ssl:.2f}, "
            f"wins {wins}/10")


@criterion(9, "feature-count ablation (RF)")
def test_c9_feature_ablation(big_city):
    city, matrix, _pseudo = big_city
    results = {}
    for label, levels in (("all", None), ("building", ["building"])):
        cfg = ExperimentConfig.from_dict({
            "kinds": ["random_forest"], "hyperparameters": RF_HYPER,
            "sets": ["RAW"], "seeds": list(range(10)),
            "n_raw": 300, "n_svi": 0, "n_validation": 2000})
        cfg.feature_levels = levels
        report = run_experiment(matrix, city.truth, {}, cfg)
        results[label] = {r["seed"]: r["mae"] for r in report["rows"]}
    wins = sum(results["all"][s] <= results["building"][s] for s in range(10))
    assert wins >= 8, f"all-features won only {wins}/10 seeds"
    med_all = statistics.median(results["all"].values())
    med_b = statistics.median(results["building"].values())
    return f"median MAE all {med_all:.2f} vs building-only {med_b:.2f}, wins {wins}/10"


@criterion(10, "LoD1 export validity")
def test_c10_lod1_export(small_city, tmp_path):
    city = small_city
    heights = {b: max(2.5, h) for b, h in city.truth.items()}
    model = lod1.build_model(city.footprints, heights)
    cj = tmp_path / "city.json"
    lod1.export_cityjson(model, cj)
    doc = json.loads(cj.read_text())
    validate_cityjson(doc)

    verts = lod1.parse_cityjson_vertices(doc)
    for solid in model.solids:
        shell = doc["CityObjects"][solid.building_id]["geometry"][0]["boundaries"][0]
        bottom, top = shell[0], shell[1]
        area = (oracles.polygon_area_shoelace([verts[i][:2] for i in top[0]])
                - sum(oracles.polygon_area_shoelace([verts[i][:2] for i in ring])
                      for ring in top[1:]))
        height = verts[top[0][0]][2] - verts[bottom[0][0]][2]
        assert area * height == pytest.approx(solid.volume, abs=1e-3), solid.building_id

    obj_path = tmp_path / "city.obj"
    lod1.export_obj(model, obj_path)
    _verts, objs = lod1.parse_obj(obj_path)
    from collections import Counter
    for bid, tris in objs.items():
        counter = Counter()
        for (a, b, c) in tris:
            for e in ((a, b), (b, c), (c, a)):
                counter[tuple(sorted(e))] += 1
        assert all(v == 2 for v in counter.values()), f"{bid} not watertight"
    return f"{len(model.solids)} solids, schema + volumes + watertight"


@criterion(11, "end-to-end determinism")
def test_c11_pipeline_determinism(tmp_path):
    city_dir = tmp_path / "city"
    assert cli_main(["synth", "--out", str(city_dir), "--blocks", "3",
                     "--per-block", "3", "--seed", "99",
                     "--svi-fraction", "0.5"]) == 0
    cfg = {
        "paths": {
            "buildings": str(city_dir / "buildings.geojson"),
            "streets": str(city_dir / "streets.geojson"),
            "cameras": str(city_dir / "cameras.jsonl"),
            "detections": str(city_dir / "detections.jsonl"),
            "raw_labels": str(city_dir / "truth.csv"),
            "out_dir": str(tmp_path / "out"),
        },
        "regression": {"kinds": ["random_forest"],
                       "hyperparameters": {"random_forest": {"n_trees": 8,
                                                             "min_leaf": 4}},
                       "sets": ["RAW", "SSL"], "mix": {"a": 0.5}, "seeds": [0],
                       "n_raw": 6, "n_svi": 6, "n_validation": 8},
    }
    cfg_path = tmp_path / "pipeline.json"
    cfg_path.write_text(json.dumps(cfg))

    def run_and_hash():
        assert cli_main(["pipeline", "--config", str(cfg_path)]) == 0
        out = Path(cfg["paths"]["out_dir"])
        hashes = {}
        for p in sorted(out.rglob("*")):
            # run manifests carry wall-clock timings and are diagnostics,
            # not pipeline outputs
            if p.is_dir() or p.name.endswith("_run_manifest.json"):
                continue
            hashes[str(p.relative_to(out))] = hashlib.sha256(p.read_bytes()).hexdigest()
        return hashes

    first = run_and_hash()
    second = run_and_hash()
    assert first, "pipeline produced no outputs"
    assert first == second, "outputs differ between identical runs"
    return f"{len(first)} files byte-identical"
