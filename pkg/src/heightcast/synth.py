"""Seeded synthetic-city generation for tests and experiments.

Builds a k x k block grid with irregular street spacing, rectangular
buildings on a per-block sub-grid, ground-truth heights as a linear
function of footprint area and block area plus Gaussian noise, cameras
facing sampled buildings from the street side, and facade detection sets
that encode the quantized truth floors (optionally corrupted by one floor).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .floors import FLOOR_HEIGHTS
from .geodata import (BuildingFunction, Footprint, GeoPoint, LocalProjection,
                      StreetSegment, build_network)

FUNCTION_TAGS = {
    BuildingFunction.RESIDENTIAL: {"building": "house"},
    BuildingFunction.COMMERCIAL_PUBLIC: {"building": "retail"},
    BuildingFunction.UNKNOWN: {"building": "yes"},
}

ROW_SPACING_PX = 60.0
WINDOW_H_PX = 30.0
WINDOW_W_PX = 22.0
IMAGE_W_PX = 640


@dataclass(frozen=True)
class SyntheticCitySpec:
    blocks: int = 5
    buildings_per_block: int = 4
    seed: int = 0
    noise_sigma: float = 1.0
    flip_probability: float = 0.0    # chance of a +-1 floor pseudo-label error
    svi_fraction: float = 0.3
    base_height: float = 8.0
    area_coeff: float = 0.01
    block_area_coeff: float = 0.0    # metres of height per 100 m2 of block area
    edge_coeff: float = 0.0          # metres of height per metre from the block edge
    row_jitter: float = 0.0          # fraction of ROW_SPACING_PX
    origin_lon: float = 8.68
    origin_lat: float = 49.41


@dataclass
class SynthCity:
    spec: SyntheticCitySpec
    projection: LocalProjection
    footprints: list
    segments: list
    mapillary_records: list      # JSON-able Mapillary-v4-shaped dicts
    detections: list             # JSON-able detection-set dicts
    truth: dict                  # building_id -> height (m)
    pseudo_floors: dict          # building_id -> encoded floor count
    svi_ids: list
    block_of: dict = field(default_factory=dict)

    @property
    def network(self):
        return build_network(self.segments)


def generate_synthetic_city(spec: SyntheticCitySpec) -> SynthCity:
    rng = np.random.default_rng(spec.seed)
    k = spec.blocks
    projection = LocalProjection(GeoPoint(spec.origin_lon, spec.origin_lat))

    col_w = rng.uniform(85.0, 140.0, k)
    row_h = rng.uniform(85.0, 140.0, k)
    xs = np.concatenate([[0.0], np.cumsum(col_w)])
    ys = np.concatenate([[0.0], np.cumsum(row_h)])

    segments = []
    for i in range(k + 1):
        segments.append(StreetSegment(f"v{i}", [(xs[i], ys[0]), (xs[i], ys[-1])],
                                      _maybe_width(rng)))
        segments.append(StreetSegment(f"h{i}", [(xs[0], ys[i]), (xs[-1], ys[i])],
                                      _maybe_width(rng)))

    margin = 7.0
    g = math.ceil(math.sqrt(spec.buildings_per_block))
    footprints = []
    block_of = {}
    block_area_of = {}
    edge_dist_of = {}
    functions = np.array([BuildingFunction.RESIDENTIAL,
                          BuildingFunction.COMMERCIAL_PUBLIC,
                          BuildingFunction.UNKNOWN], dtype=object)
    idx = 0
    for r in range(k):
        for c in range(k):
            bx0, bx1 = xs[c] + margin, xs[c + 1] - margin
            by0, by1 = ys[r] + margin, ys[r + 1] - margin
            cell_w = (bx1 - bx0) / g
            cell_h = (by1 - by0) / g
            block_area = float((xs[c + 1] - xs[c]) * (ys[r + 1] - ys[r]))
            for b in range(spec.buildings_per_block):
                gr, gc = divmod(b, g)
                cx0 = bx0 + gc * cell_w
                cy0 = by0 + gr * cell_h
                fx = rng.uniform(0.40, 0.72)
                fy = rng.uniform(0.40, 0.72)
                w = fx * cell_w
                h = fy * cell_h
                jx = rng.uniform(-0.15, 0.15) * (cell_w - w)
                jy = rng.uniform(-0.15, 0.15) * (cell_h - h)
                x0 = cx0 + (cell_w - w) / 2 + jx
                y0 = cy0 + (cell_h - h) / 2 + jy
                ring = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h),
                        (x0, y0)]
                fn = functions[rng.choice(3, p=[0.7, 0.2, 0.1])]
                fid = f"b{idx:04d}"
                footprints.append(Footprint(fid, ring, [], fn,
                                            dict(FUNCTION_TAGS[fn])))
                block_of[fid] = (r, c)
                block_area_of[fid] = block_area
                ccx, ccy = x0 + w / 2, y0 + h / 2
                edge_dist_of[fid] = float(min(ccx - xs[c], xs[c + 1] - ccx,
                                              ccy - ys[r], ys[r + 1] - ccy))
                idx += 1

    areas = np.array([fp.area for fp in footprints])
    block_areas = np.array([block_area_of[fp.id] for fp in footprints])
    edge_dists = np.array([edge_dist_of[fp.id] for fp in footprints])
    noise = rng.normal(0.0, spec.noise_sigma, len(footprints))
    heights = (spec.base_height
               + spec.area_coeff * (areas - areas.mean())
               + spec.block_area_coeff * (block_areas - block_areas.mean()) / 100.0
               + spec.edge_coeff * (edge_dists - edge_dists.mean())
               + noise)
    heights = np.maximum(heights, 2.5)
    truth = {fp.id: float(h) for fp, h in zip(footprints, heights)}

    n_svi = int(round(spec.svi_fraction * len(footprints)))
    svi_pick = sorted(rng.choice(len(footprints), size=n_svi, replace=False))
    svi_ids = [footprints[i].id for i in svi_pick]

    records = []
    detections = []
    pseudo_floors = {}
    img_n = 0
    for i in svi_pick:
        fp = footprints[i]
        xs_ring = [p[0] for p in fp.exterior]
        ys_ring = [p[1] for p in fp.exterior]
        south_mid = ((min(xs_ring) + max(xs_ring)) / 2.0, min(ys_ring))
        floor_h = FLOOR_HEIGHTS[fp.function]
        floors = max(1, int(truth[fp.id] // floor_h))
        if spec.flip_probability > 0 and rng.random() < spec.flip_probability:
            floors = max(1, floors + (1 if rng.random() < 0.5 else -1))
        pseudo_floors[fp.id] = floors
        n_images = 2 if rng.random() < 0.15 else 1
        for _ in range(n_images):
            d = rng.uniform(3.0, 6.5)
            pos = (south_mid[0] + rng.uniform(-1.0, 1.0), south_mid[1] - d)
            angle = rng.uniform(-8.0, 8.0) % 360.0
            ll = projection.unproject(pos)
            records.append({
                "id": f"img{img_n:05d}",
                "computed_geometry": {"type": "Point",
                                      "coordinates": [ll.lon, ll.lat]},
                "computed_compass_angle": float(angle),
                "computed_altitude": float(rng.uniform(100.0, 130.0)),
                "computed_rotation": [0.0, 0.0, 0.0],
                "camera_type": "perspective",
                "captured_at": 1_650_000_000_000 + img_n,
                "camera_parameters": [0.85, 0.01, -0.003],
                "exif_orientation": 1,
            })
            detections.append(synth_detection_set(f"img{img_n:05d}", floors, rng,
                                                  spec.row_jitter))
            img_n += 1

    return SynthCity(spec, projection, footprints, segments, records,
                     detections, truth, pseudo_floors, svi_ids, block_of)


def synth_detection_set(image_id: str, floors: int, rng, jitter: float = 0.0,
                        windows_per_row=None) -> dict:
    """A facade detection set whose row structure encodes a floor count."""
    image_h = int(120 + floors * ROW_SPACING_PX)
    dets = []
    centers = []
    for f in range(floors):
        y_c = image_h - 60.0 - f * ROW_SPACING_PX
        y_c += rng.uniform(-jitter, jitter) * ROW_SPACING_PX
        y_c = min(max(y_c, WINDOW_H_PX / 2 + 1), image_h - WINDOW_H_PX / 2 - 1)
        centers.append(y_c)
        n_win = int(windows_per_row or rng.integers(1, 7))
        slot = IMAGE_W_PX / (n_win + 1)
        for wv in range(n_win):
            x0 = (wv + 1) * slot - WINDOW_W_PX / 2
            dets.append({"class": "window",
                         "bbox": [round(x0, 2), round(y_c - WINDOW_H_PX / 2, 2),
                                  round(x0 + WINDOW_W_PX, 2),
                                  round(y_c + WINDOW_H_PX / 2, 2)],
                         "confidence": round(float(rng.uniform(0.55, 0.98)), 4)})
    if rng.random() < 0.5:
        y_c = centers[0]  # ground row; overlap keeps the floor count unchanged
        dets.append({"class": "door",
                     "bbox": [20.0, round(y_c - 20.0, 2), 45.0,
                              round(min(y_c + 28.0, image_h - 1.0), 2)],
                     "confidence": round(float(rng.uniform(0.55, 0.98)), 4)})
    return {"image_id": image_id, "image_width_px": IMAGE_W_PX,
            "image_height_px": image_h, "detections": dets}


def _maybe_width(rng):
    return round(float(rng.uniform(5.0, 9.0)), 1) if rng.random() < 0.5 else None


# ---------------------------------------------------------------------------
# file output (the planar scene re-expressed as WGS84 inputs)

def write_city_files(city: SynthCity, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    proj = city.projection

    def ll(p):
        gp = proj.unproject(p)
        return [gp.lon, gp.lat]

    features = []
    for fp in city.footprints:
        rings = [[ll(p) for p in fp.exterior]]
        for hole in fp.holes:
            rings.append([ll(p) for p in hole])
        features.append({"type": "Feature", "id": fp.id,
                         "properties": dict(fp.tags),
                         "geometry": {"type": "Polygon", "coordinates": rings}})
    buildings = out / "buildings.geojson"
    buildings.write_text(json.dumps(
        {"type": "FeatureCollection", "features": features}, sort_keys=True))

    features = []
    for seg in city.segments:
        props = {}
        if seg.width_hint is not None:
            props["width"] = str(seg.width_hint)
        features.append({"type": "Feature", "id": seg.id, "properties": props,
                         "geometry": {"type": "LineString",
                                      "coordinates": [ll(p) for p in seg.polyline]}})
    streets = out / "streets.geojson"
    streets.write_text(json.dumps(
        {"type": "FeatureCollection", "features": features}, sort_keys=True))

    cameras = out / "cameras.jsonl"
    cameras.write_text("\n".join(json.dumps(r, sort_keys=True)
                                 for r in city.mapillary_records) + "\n")
    detections = out / "detections.jsonl"
    detections.write_text("\n".join(json.dumps(d, sort_keys=True)
                                    for d in city.detections) + "\n")

    truth = out / "truth.csv"
    with open(truth, "w") as fh:
        fh.write("building_id,height_m\n")
        for bid in sorted(city.truth):
            fh.write(f"{bid},{city.truth[bid]!r}\n")

    return {"buildings": buildings, "streets": streets, "cameras": cameras,
            "detections": detections, "truth": truth}
