"""Vector-data ingestion: footprints, street networks, and the local
metric plane everything downstream works in.

Input format is GeoJSON FeatureCollection (WGS84). All geometry is
projected into a local azimuthal equidistant plane centred on the dataset,
so distances and areas are in metres. Loaded objects are treated as
immutable: loaders are single-threaded per file and everything afterwards
is safe for shared read-only concurrent access.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path

from . import geometry
from .errors import EmptyNetworkError, InputError, ProjectionError
from .spatialindex import SpatialIndex

EARTH_RADIUS_M = 6_371_008.8
MAX_PROJECTION_RANGE_M = 100_000.0
RING_CLEAN_TOL = 1e-9
NODE_SNAP_TOL = 1e-9

# building= tag values mapped to a coarse function class; anything else is
# unknown. Overridable via the function_map argument of load_buildings.
DEFAULT_FUNCTION_MAP = {
    "house": "residential",
    "residential": "residential",
    "apartments": "residential",
    "detached": "residential",
    "semidetached_house": "residential",
    "terrace": "residential",
    "commercial": "commercial_public",
    "retail": "commercial_public",
    "office": "commercial_public",
    "industrial": "commercial_public",
    "public": "commercial_public",
    "school": "commercial_public",
    "church": "commercial_public",
    "university": "commercial_public",
    "hospital": "commercial_public",
}

COMMERCIAL_AMENITIES = {
    "school", "university", "hospital", "place_of_worship", "townhall",
    "library", "marketplace", "community_centre",
}


class BuildingFunction(str, Enum):
    RESIDENTIAL = "residential"
    COMMERCIAL_PUBLIC = "commercial_public"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class GeoPoint:
    lon: float
    lat: float

    def __post_init__(self):
        if not (-180.0 <= self.lon <= 180.0) or not (-90.0 <= self.lat <= 90.0):
            raise InputError(f"coordinate out of range: ({self.lon}, {self.lat})")


@dataclass(frozen=True)
class LocalProjection:
    """Azimuthal equidistant projection about a fixed origin.

    Distances and bearings from the origin are preserved, which keeps every
    buffer and length feature metric without choosing a regional CRS.
    """

    origin: GeoPoint
    kind: str = "azimuthal-equidistant"

    @classmethod
    def for_points(cls, points):
        pts = list(points)
        if not pts:
            raise InputError("cannot centre a projection on zero points")
        lon = sum(p.lon for p in pts) / len(pts)
        lat = sum(p.lat for p in pts) / len(pts)
        return cls(GeoPoint(lon, lat))

    def project(self, p: GeoPoint):
        lam0 = math.radians(self.origin.lon)
        phi0 = math.radians(self.origin.lat)
        lam = math.radians(p.lon)
        phi = math.radians(p.lat)
        cos_c = math.sin(phi0) * math.sin(phi) + math.cos(phi0) * math.cos(phi) * math.cos(lam - lam0)
        cos_c = max(-1.0, min(1.0, cos_c))
        c = math.acos(cos_c)
        if c * EARTH_RADIUS_M >= MAX_PROJECTION_RANGE_M:
            raise ProjectionError(
                f"point ({p.lon}, {p.lat}) is {c * EARTH_RADIUS_M / 1000:.0f} km from the "
                f"projection origin (limit {MAX_PROJECTION_RANGE_M / 1000:.0f} km)")
        if c < 1e-12:
            return (0.0, 0.0)
        k = c / math.sin(c)
        x = EARTH_RADIUS_M * k * math.cos(phi) * math.sin(lam - lam0)
        y = EARTH_RADIUS_M * k * (math.cos(phi0) * math.sin(phi)
                                  - math.sin(phi0) * math.cos(phi) * math.cos(lam - lam0))
        return (x, y)

    def unproject(self, xy) -> GeoPoint:
        x, y = xy
        rho = math.hypot(x, y)
        if rho < 1e-12:
            return self.origin
        c = rho / EARTH_RADIUS_M
        phi0 = math.radians(self.origin.lat)
        sin_c, cos_c = math.sin(c), math.cos(c)
        phi = math.asin(cos_c * math.sin(phi0) + (y * sin_c * math.cos(phi0)) / rho)
        lam = math.radians(self.origin.lon) + math.atan2(
            x * sin_c, rho * cos_c * math.cos(phi0) - y * sin_c * math.sin(phi0))
        return GeoPoint(math.degrees(lam), math.degrees(phi))


@dataclass
class Footprint:
    """One projected building polygon; one polygon is one building."""

    id: str
    exterior: list  # closed ring, CCW
    holes: list     # closed rings, CW
    function: BuildingFunction
    tags: dict

    @cached_property
    def area(self) -> float:
        return geometry.polygon_area(self.exterior, self.holes)

    @cached_property
    def centroid(self):
        return geometry.polygon_centroid(self.exterior, self.holes)

    @cached_property
    def bbox(self):
        xs = [p[0] for p in self.exterior]
        ys = [p[1] for p in self.exterior]
        return (min(xs), min(ys), max(xs), max(ys))

    def boundary_rings(self):
        yield self.exterior
        yield from self.holes


@dataclass
class StreetSegment:
    id: str
    polyline: list  # >= 2 distinct planar points
    width_hint: float | None = None

    @cached_property
    def length(self) -> float:
        return sum(math.dist(self.polyline[i], self.polyline[i + 1])
                   for i in range(len(self.polyline) - 1))


@dataclass
class GraphEdge:
    a: int
    b: int
    points: list
    segment_id: str

    @cached_property
    def length(self) -> float:
        return sum(math.dist(self.points[i], self.points[i + 1])
                   for i in range(len(self.points) - 1))


@dataclass
class StreetNetwork:
    """Noded planar street graph: nodes at endpoints and crossings only."""

    segments: list
    nodes: list = field(default_factory=list)        # node_id -> (x, y)
    edges: list = field(default_factory=list)        # GraphEdge
    adjacency: list = field(default_factory=list)    # node_id -> [(other, edge_idx)]

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def intersection_nodes(self):
        return [i for i in range(len(self.nodes)) if self.degree(i) >= 3]

    def nearest_segment(self, point):
        """(segment index, perpendicular distance, foot point); ties take the
        lower segment index."""
        best = None
        for si, seg in enumerate(self.segments):
            for i in range(len(seg.polyline) - 1):
                d, _t, foot = geometry.dist_point_segment(point, seg.polyline[i], seg.polyline[i + 1])
                if best is None or d < best[0] - 1e-12:
                    best = (d, si, foot)
        if best is None:
            raise EmptyNetworkError("network has no segments")
        return (best[1], best[0], best[2])

    def nearest_node(self, point) -> int:
        best = None
        for ni, (x, y) in enumerate(self.nodes):
            d = math.hypot(x - point[0], y - point[1])
            if best is None or d < best[0] - 1e-12:
                best = (d, ni)
        if best is None:
            raise EmptyNetworkError("network has no nodes")
        return best[1]


@dataclass
class LoadReport:
    read: int = 0
    kept: int = 0
    skipped: int = 0
    reasons: list = field(default_factory=list)

    def skip(self, ident, reason):
        self.skipped += 1
        self.reasons.append({"id": ident, "reason": reason})

    def to_dict(self):
        return {"read": self.read, "kept": self.kept,
                "skipped": self.skipped, "reasons": self.reasons}


def _read_feature_collection(path):
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read GeoJSON file {p}: {exc}") from exc
    if not isinstance(data, dict) or data.get("type") != "FeatureCollection":
        raise InputError(f"{p}: expected a GeoJSON FeatureCollection")
    return data.get("features", [])


def _feature_id(feature, fallback):
    if feature.get("id") is not None:
        return str(feature["id"])
    props = feature.get("properties") or {}
    for key in ("id", "@id", "osm_id"):
        if props.get(key) is not None:
            return str(props[key])
    return fallback


def derive_function(tags, function_map=None) -> BuildingFunction:
    fmap = DEFAULT_FUNCTION_MAP if function_map is None else function_map
    building = tags.get("building")
    if building in fmap:
        return BuildingFunction(fmap[building])
    if tags.get("amenity") in COMMERCIAL_AMENITIES:
        return BuildingFunction.COMMERCIAL_PUBLIC
    return BuildingFunction.UNKNOWN


def _ring_is_simple(pts) -> bool:
    """Brute-force self-intersection check on an open ring."""
    n = len(pts)
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared-vertex neighbours
            b1, b2 = pts[j], pts[(j + 1) % n]
            if geometry.segment_intersections(a1, a2, b1, b2):
                return False
    return True


def _clean_polygon(rings_ll, projection):
    """Project and clean one GeoJSON polygon (list of rings, exterior first).
    Returns (exterior, holes) in closed form, or a reason string on failure."""
    if not rings_ll:
        return "polygon without rings"
    cleaned = []
    for ring in rings_ll:
        pts = []
        for coord in ring:
            pts.append(projection.project(GeoPoint(float(coord[0]), float(coord[1]))))
        pts = geometry.dedupe_ring(pts, RING_CLEAN_TOL)
        cleaned.append(pts)
    exterior = cleaned[0]
    if len(exterior) < 3:
        return "fewer than 3 distinct points"
    if not _ring_is_simple(exterior):
        return "self-intersecting exterior ring"
    if geometry.ring_area(exterior) <= 0.0:
        return "zero-area polygon"
    exterior = geometry.close_ring(geometry.orient_ring(exterior, ccw=True))
    holes = []
    for ring in cleaned[1:]:
        if len(ring) < 3 or geometry.ring_area(ring) <= 0.0:
            continue  # degenerate hole: drop, keep the building
        holes.append(geometry.close_ring(geometry.orient_ring(ring, ccw=False)))
    return (exterior, holes)


def load_buildings(path, projection, function_map=None):
    """Load building footprints from a GeoJSON file.

    Multipolygons are split into one Footprint per part. Returns
    (footprints, LoadReport).
    """
    features = _read_feature_collection(path)
    footprints = []
    report = LoadReport()
    for i, feature in enumerate(features):
        geom = feature.get("geometry") or {}
        gtype = geom.get("type")
        if gtype not in ("Polygon", "MultiPolygon"):
            continue
        report.read += 1
        fid = _feature_id(feature, f"f{i}")
        tags = {str(k): str(v) for k, v in (feature.get("properties") or {}).items()}
        function = derive_function(tags, function_map)
        polygons = geom.get("coordinates") or []
        if gtype == "Polygon":
            polygons = [polygons]
        multi = len(polygons) > 1
        kept_any = False
        for part, rings in enumerate(polygons):
            result = _clean_polygon(rings, projection)
            part_id = f"{fid}/{part}" if multi else fid
            if isinstance(result, str):
                report.skip(part_id, result)
                continue
            exterior, holes = result
            footprints.append(Footprint(part_id, exterior, holes, function, tags))
            kept_any = True
        if kept_any:
            report.kept += 1
    return footprints, report


def _parse_width(value):
    if value is None:
        return None
    text = str(value).strip().rstrip("m").strip()
    try:
        w = float(text.replace(",", "."))
    except ValueError:
        return None
    return w if w > 0 else None


def load_streets(path, projection):
    """Load a street network from a GeoJSON file and node it.

    Every crossing between segments becomes a graph node; interior polyline
    vertices stay interior. Returns (StreetNetwork, LoadReport).
    """
    features = _read_feature_collection(path)
    segments = []
    report = LoadReport()
    for i, feature in enumerate(features):
        geom = feature.get("geometry") or {}
        gtype = geom.get("type")
        if gtype not in ("LineString", "MultiLineString"):
            continue
        report.read += 1
        fid = _feature_id(feature, f"s{i}")
        props = feature.get("properties") or {}
        width = _parse_width(props.get("width"))
        lines = geom.get("coordinates") or []
        if gtype == "LineString":
            lines = [lines]
        multi = len(lines) > 1
        kept_any = False
        for part, coords in enumerate(lines):
            pts = [projection.project(GeoPoint(float(c[0]), float(c[1]))) for c in coords]
            deduped = [pts[0]] if pts else []
            for p in pts[1:]:
                if math.dist(deduped[-1], p) >= RING_CLEAN_TOL:
                    deduped.append(p)
            part_id = f"{fid}/{part}" if multi else fid
            if len(deduped) < 2:
                report.skip(part_id, "fewer than 2 distinct points")
                continue
            segments.append(StreetSegment(part_id, deduped, width))
            kept_any = True
        if kept_any:
            report.kept += 1
    if not segments:
        raise EmptyNetworkError(f"{path}: no usable linestrings")
    return build_network(segments), report


class _NodeRegistry:
    """Coordinate -> node id with snap tolerance merging."""

    def __init__(self, tol=NODE_SNAP_TOL):
        self.tol = tol
        self.coords = []
        self._lookup = {}

    def _key(self, p):
        return (round(p[0] / self.tol), round(p[1] / self.tol))

    def get(self, p) -> int:
        kx, ky = self._key(p)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                nid = self._lookup.get((kx + dx, ky + dy))
                if nid is not None and math.dist(self.coords[nid], p) <= self.tol:
                    return nid
        nid = len(self.coords)
        self.coords.append((p[0], p[1]))
        self._lookup[(kx, ky)] = nid
        return nid


def build_network(segments) -> StreetNetwork:
    """Node a set of street segments into a planar graph."""
    # elementary straight pieces of every polyline
    elems = []  # (seg_idx, vertex_idx, a, b)
    for si, seg in enumerate(segments):
        for vi in range(len(seg.polyline) - 1):
            elems.append((si, vi, seg.polyline[vi], seg.polyline[vi + 1]))

    boxes = []
    for ei, (_si, _vi, a, b) in enumerate(elems):
        boxes.append((ei, (min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1])),
                      ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)))
    index = SpatialIndex(boxes)

    # split events per segment: (global_param, point)
    cuts: dict[int, list] = {si: [] for si in range(len(segments))}

    def record(si, vi, t, point):
        # snap cuts at elementary-edge endpoints to the exact vertex coordinate
        if t <= 1e-12:
            point = segments[si].polyline[vi]
            t = 0.0
        elif t >= 1 - 1e-12:
            point = segments[si].polyline[vi + 1]
            t = 1.0
        cuts[si].append((vi + t, point))

    for ei, (si, vi, a, b) in enumerate(elems):
        minx, miny = min(a[0], b[0]), min(a[1], b[1])
        maxx, maxy = max(a[0], b[0]), max(a[1], b[1])
        for ej in index.query_box(minx - NODE_SNAP_TOL, miny - NODE_SNAP_TOL,
                                  maxx + NODE_SNAP_TOL, maxy + NODE_SNAP_TOL):
            if ej <= ei:
                continue
            sj, vj, c, d = elems[ej]
            if si == sj and abs(vi - vj) == 1:
                continue  # consecutive pieces of one polyline share a vertex by design
            for t, u in geometry.segment_intersections(a, b, c, d):
                point = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
                record(si, vi, t, point)
                record(sj, vj, u, point)

    registry = _NodeRegistry()
    edges = []
    for si, seg in enumerate(segments):
        pl = seg.polyline
        n = len(pl)
        params = [(0.0, pl[0]), (float(n - 1), pl[-1])] + cuts[si]
        params.sort(key=lambda c: c[0])
        # merge duplicate cuts; a closed-loop polyline legitimately repeats its
        # start coordinate at the far end, so coordinates alone do not decide
        merged = [params[0]]
        for param, point in params[1:]:
            dp = param - merged[-1][0]
            if dp < 1e-9 or (dp < 1.0 and math.dist(point, merged[-1][1]) <= NODE_SNAP_TOL):
                continue
            merged.append((param, point))
        for (p0, pt0), (p1, pt1) in zip(merged, merged[1:]):
            chain = [pt0]
            lo = int(math.floor(p0)) + 1
            hi = int(math.ceil(p1)) - 1
            for vi in range(lo, hi + 1):
                v = pl[vi]
                if math.dist(chain[-1], v) > NODE_SNAP_TOL:
                    chain.append(v)
            if math.dist(chain[-1], pt1) > NODE_SNAP_TOL:
                chain.append(pt1)
            elif len(chain) > 1:
                chain[-1] = pt1
            else:
                continue
            if len(chain) < 2:
                continue
            na = registry.get(chain[0])
            nb = registry.get(chain[-1])
            edges.append(GraphEdge(na, nb, chain, seg.id))

    net = StreetNetwork(segments=list(segments), nodes=registry.coords, edges=edges)
    net.adjacency = [[] for _ in net.nodes]
    for eidx, edge in enumerate(net.edges):
        net.adjacency[edge.a].append((edge.b, eidx))
        net.adjacency[edge.b].append((edge.a, eidx))
    return net


def build_spatial_index(footprints) -> SpatialIndex:
    """Index footprints for box queries and k-nearest centroid lookups."""
    if not footprints:
        raise InputError("cannot index zero footprints")
    return SpatialIndex((i, fp.bbox, fp.centroid) for i, fp in enumerate(footprints))
