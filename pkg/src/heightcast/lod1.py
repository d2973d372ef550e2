"""LoD1 city models: extruded footprint prisms, written as CityJSON 1.1 or
Wavefront OBJ.

Surfaces are oriented outward: top rings counter-clockwise seen from above,
bottom rings clockwise, wall quads along the ring direction. CityJSON
output quantizes coordinates to millimetres through the mandatory
transform; identical models serialize byte-identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import geometry
from .errors import ExportError, InputError

MIN_HEIGHT_M = 2.5
# micrometre quantization keeps per-building volumes reproducible to 1e-3 m3
# after the integer round trip; millimetre vertices cannot guarantee that
QUANTUM_M = 1e-6


@dataclass
class PrismSolid:
    building_id: str
    footprint: object
    height: float
    rings: list = field(default_factory=list)   # open rings: exterior CCW, holes CW

    @property
    def base_area(self) -> float:
        return geometry.polygon_area(self.rings[0], self.rings[1:])

    @property
    def volume(self) -> float:
        return self.base_area * self.height

    @property
    def wall_count(self) -> int:
        return sum(len(r) for r in self.rings)


@dataclass
class CityModel:
    solids: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [s.building_id for s in self.solids]
        if len(ids) != len(set(ids)):
            raise InputError("duplicate building ids in city model")


def extrude(footprint, height: float) -> PrismSolid:
    """Extrude a footprint into a flat-topped prism of the given height."""
    if height < MIN_HEIGHT_M:
        raise InputError(
            f"{footprint.id}: height {height} m is below the {MIN_HEIGHT_M} m minimum")
    rings = [geometry.orient_ring(geometry.open_ring(footprint.exterior), ccw=True)]
    for hole in footprint.holes:
        rings.append(geometry.orient_ring(geometry.open_ring(hole), ccw=False))
    return PrismSolid(footprint.id, footprint, float(height), rings)


def build_model(footprints, heights: dict, metadata=None,
                min_height: float = MIN_HEIGHT_M) -> CityModel:
    """One prism per footprint with a height entry; heights below min_height
    are lifted to it."""
    solids = []
    for fp in footprints:
        if fp.id not in heights:
            continue
        solids.append(extrude(fp, max(float(heights[fp.id]), min_height)))
    return CityModel(solids, dict(metadata or {}))


# ---------------------------------------------------------------------------
# CityJSON

class _VertexPool:
    """Shared integer-vertex pool with exact dedup."""

    def __init__(self, translate):
        self.translate = translate
        self.vertices = []
        self._ids = {}

    def get(self, x, y, z) -> int:
        key = (round((x - self.translate[0]) / QUANTUM_M),
               round((y - self.translate[1]) / QUANTUM_M),
               round((z - self.translate[2]) / QUANTUM_M))
        if key not in self._ids:
            self._ids[key] = len(self.vertices)
            self.vertices.append(list(key))
        return self._ids[key]


def _solid_boundaries(solid: PrismSolid, pool: _VertexPool):
    bottom = []
    top = []
    for ring in solid.rings:
        bottom.append([pool.get(p[0], p[1], 0.0) for p in reversed(ring)])
        top.append([pool.get(p[0], p[1], solid.height) for p in ring])
    walls = []
    for ring in solid.rings:
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            walls.append([[pool.get(a[0], a[1], 0.0), pool.get(b[0], b[1], 0.0),
                           pool.get(b[0], b[1], solid.height),
                           pool.get(a[0], a[1], solid.height)]])
    return [[bottom, top] + walls]


def export_cityjson(model: CityModel, path):
    """Write the model as a CityJSON 1.1 document (one Building per solid)."""
    if not model.solids:
        raise InputError("city model has no solids to export")
    minx = min(p[0] for s in model.solids for r in s.rings for p in r)
    miny = min(p[1] for s in model.solids for r in s.rings for p in r)
    pool = _VertexPool((minx, miny, 0.0))
    city_objects = {}
    for solid in model.solids:
        boundaries = _solid_boundaries(solid, pool)
        attributes = {"measuredHeight": round(solid.height, 3)}
        fn = getattr(solid.footprint, "function", None)
        if fn is not None:
            attributes["function"] = str(getattr(fn, "value", fn))
        city_objects[solid.building_id] = {
            "type": "Building",
            "attributes": attributes,
            "geometry": [{"type": "Solid", "lod": "1", "boundaries": boundaries}],
        }
    maxx = max(p[0] for s in model.solids for r in s.rings for p in r)
    maxy = max(p[1] for s in model.solids for r in s.rings for p in r)
    maxz = max(s.height for s in model.solids)
    doc = {
        "type": "CityJSON",
        "version": "1.1",
        "transform": {"scale": [QUANTUM_M] * 3, "translate": [minx, miny, 0.0]},
        "metadata": {
            "geographicalExtent": [minx, miny, 0.0, maxx, maxy, maxz],
            "title": "heightcast LoD1 model (local metric frame)",
        },
        "CityObjects": city_objects,
        "vertices": pool.vertices,
    }
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    if model.metadata:
        meta_path = str(path) + ".meta.json"
        with open(meta_path, "w") as fh:
            json.dump(model.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return path


def parse_cityjson_vertices(doc: dict):
    """Vertices of a CityJSON document in metres (inverse of the transform)."""
    t = doc["transform"]
    return [(v[0] * t["scale"][0] + t["translate"][0],
             v[1] * t["scale"][1] + t["translate"][1],
             v[2] * t["scale"][2] + t["translate"][2]) for v in doc["vertices"]]


# ---------------------------------------------------------------------------
# OBJ

def _triangulate_base(solid: PrismSolid):
    """CCW triangles covering the footprint (holes bridged)."""
    if len(solid.rings) == 1:
        return geometry.ear_clip(solid.rings[0])
    merged = geometry.bridge_holes(solid.rings[0], solid.rings[1:])
    return geometry.ear_clip(merged)


def export_obj(model: CityModel, path):
    """Write the model as a triangulated Wavefront OBJ, one object per
    building, outward-oriented and watertight per building."""
    if not model.solids:
        raise InputError("city model has no solids to export")
    lines = ["# LoD1 prism model"]
    vertex_ids = {}

    def vid(x, y, z):
        key = (repr(x), repr(y), repr(z))
        if key not in vertex_ids:
            vertex_ids[key] = len(vertex_ids) + 1
            lines.append(f"v {key[0]} {key[1]} {key[2]}")
        return vertex_ids[key]

    face_lines = []
    for solid in model.solids:
        try:
            base = _triangulate_base(solid)
        except ValueError as exc:
            raise ExportError(
                f"cannot triangulate footprint {solid.building_id}: {exc}") from exc
        face_lines.append(f"o {solid.building_id}")
        h = solid.height
        for (a, b, c) in base:
            face_lines.append("f {} {} {}".format(
                vid(a[0], a[1], 0.0), vid(c[0], c[1], 0.0), vid(b[0], b[1], 0.0)))
        for (a, b, c) in base:
            face_lines.append("f {} {} {}".format(
                vid(a[0], a[1], h), vid(b[0], b[1], h), vid(c[0], c[1], h)))
        for ring in solid.rings:
            n = len(ring)
            for i in range(n):
                a, b = ring[i], ring[(i + 1) % n]
                a0 = vid(a[0], a[1], 0.0)
                b0 = vid(b[0], b[1], 0.0)
                b1 = vid(b[0], b[1], h)
                a1 = vid(a[0], a[1], h)
                face_lines.append(f"f {a0} {b0} {b1}")
                face_lines.append(f"f {a0} {b1} {a1}")
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines + face_lines) + "\n")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


def parse_obj(path):
    """(vertices, triangles_by_object) from a triangulated OBJ file."""
    vertices = []
    objects: dict[str, list] = {}
    current = "default"
    for line in open(path):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            vertices.append(tuple(float(v) for v in parts[1:4]))
        elif parts[0] == "o":
            current = parts[1]
            objects.setdefault(current, [])
        elif parts[0] == "f":
            idx = tuple(int(p.split("/")[0]) - 1 for p in parts[1:4])
            objects.setdefault(current, []).append(idx)
    return vertices, objects
