"""Morphometric feature computation at building, street, and block level.

Per-building first-order descriptors plus buffered second-order aggregates
(total / mean / population std over neighbours whose centroid falls within
50, 200, and 500 m of the subject centroid). Empty neighbourhoods
contribute zeros so the matrix stays finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import geometry
from ..errors import EmptyNetworkError
from ..spatialindex import SpatialIndex
from . import centrality
from .blocks import assign_buildings, tessellate_blocks

SHARED_WALL_TOL = 1e-6

BUILDING_BASE_NAMES = (
    "area", "perimeter", "circular_compactness", "convexity", "orientation",
    "shared_wall_length", "corner_count", "longest_axis_length",
    "equivalent_rectangular_index",
)
BUFFERED_BUILDING_FEATURES = (
    "area", "perimeter", "convexity", "circular_compactness", "orientation",
    "corner_count",
)
AGGREGATORS = ("total", "mean", "std")

STREET_BASE_NAMES = (
    "nearest_segment_length", "nearest_segment_width",
    "distance_to_nearest_segment", "nearest_segment_linearity",
    "distance_to_nearest_intersection", "nearest_intersection_degree",
    "local_closeness", "betweenness", "buildings_on_nearest_segment",
)

BLOCK_SHAPE_NAMES = (
    "block_area", "block_perimeter", "block_convexity",
    "block_circular_compactness", "block_orientation", "block_corner_count",
    "block_longest_axis_length", "block_equivalent_rectangular_index",
)
BLOCK_CONTAINMENT_NAMES = (
    "block_building_count", "block_building_area_total",
    "block_building_area_mean", "block_building_area_std",
)


@dataclass(frozen=True)
class MorphometryConfig:
    buffers: tuple = (50.0, 200.0, 500.0)
    local_closeness_radius_m: float = 400.0
    default_street_width_m: float = 6.0
    workers: int = 1


def aggregate(values) -> dict:
    """total / mean / population std with the all-zero empty-set convention."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return {"total": 0.0, "mean": 0.0, "std": 0.0}
    return {"total": float(arr.sum()), "mean": float(arr.mean()),
            "std": float(arr.std())}


# ---------------------------------------------------------------------------
# building level

def shape_descriptors(exterior, holes=()):
    """The 8 shape values shared by footprints and street blocks."""
    pts = geometry.open_ring(exterior)
    area = geometry.polygon_area(exterior, holes)
    perimeter = geometry.ring_perimeter(exterior)
    hull = geometry.convex_hull(pts)
    hull_area = geometry.ring_area(hull)
    _cx, _cy, r_mec = geometry.min_enclosing_circle(pts)
    _corners, long_side, short_side, axis_angle = geometry.min_area_rectangle(pts)
    mrr_area = long_side * short_side
    mrr_perimeter = 2.0 * (long_side + short_side)
    circular = area / (math.pi * r_mec * r_mec) if r_mec > 0 else 0.0
    convexity = area / hull_area if hull_area > 0 else 0.0
    if mrr_area > 0 and perimeter > 0:
        eri = math.sqrt(area / mrr_area) * mrr_perimeter / perimeter
    else:
        eri = 0.0
    return {
        "area": area,
        "perimeter": perimeter,
        "circular_compactness": circular,
        "convexity": convexity,
        "orientation": geometry.deviation_from_cardinal(axis_angle),
        "corner_count": float(geometry.corner_count(pts)),
        "longest_axis_length": 2.0 * r_mec,
        "equivalent_rectangular_index": eri,
    }


def shared_wall_length(fp, others, tol=SHARED_WALL_TOL) -> float:
    """Boundary length of fp coincident with the boundary of any other
    footprint (collinear within tol)."""
    total = 0.0
    subject_edges = _boundary_edges(fp)
    for other in others:
        if other.id == fp.id:
            continue
        for a, b in subject_edges:
            for c, d in _boundary_edges(other):
                total += _collinear_overlap(a, b, c, d, tol)
    return total


def _boundary_edges(fp):
    edges = []
    for ring in fp.boundary_rings():
        pts = geometry.open_ring(ring)
        for i in range(len(pts)):
            edges.append((pts[i], pts[(i + 1) % len(pts)]))
    return edges


def _collinear_overlap(a, b, c, d, tol) -> float:
    """Length of the overlap of cd with ab when both lie on one line."""
    ux, uy = b[0] - a[0], b[1] - a[1]
    length = math.hypot(ux, uy)
    if length == 0:
        return 0.0
    ux, uy = ux / length, uy / length
    # both endpoints of cd must sit on the ab line
    for p in (c, d):
        off = abs((p[0] - a[0]) * uy - (p[1] - a[1]) * ux)
        if off > tol:
            return 0.0
    t_c = (c[0] - a[0]) * ux + (c[1] - a[1]) * uy
    t_d = (d[0] - a[0]) * ux + (d[1] - a[1]) * uy
    lo = max(0.0, min(t_c, t_d))
    hi = min(length, max(t_c, t_d))
    return max(0.0, hi - lo)


def building_base_features(fp, footprints, index=None) -> dict:
    """The 9 building-level descriptors of one footprint."""
    values = shape_descriptors(fp.exterior, fp.holes)
    if index is not None:
        x0, y0, x1, y1 = fp.bbox
        cands = [footprints[i] for i in index.query_box(
            x0 - SHARED_WALL_TOL, y0 - SHARED_WALL_TOL,
            x1 + SHARED_WALL_TOL, y1 + SHARED_WALL_TOL)]
    else:
        cands = footprints
    values["shared_wall_length"] = shared_wall_length(fp, cands)
    return {name: values[name] for name in BUILDING_BASE_NAMES}


def all_building_base(footprints, index, workers=1) -> dict:
    rows = _pmap(lambda fp: building_base_features(fp, footprints, index),
                 footprints, workers)
    return {name: np.array([r[name] for r in rows]) for name in BUILDING_BASE_NAMES}


def buffered_aggregates(base: dict, footprints, index, buffers) -> dict:
    """Second-order building features: aggregates of 6 base descriptors over
    neighbours within each buffer, subject excluded."""
    n = len(footprints)
    out = {}
    for buf in buffers:
        for feat in BUFFERED_BUILDING_FEATURES:
            for agg in AGGREGATORS:
                out[f"{feat}_{agg}_{int(buf)}m"] = np.zeros(n)
    for i, fp in enumerate(footprints):
        for buf in buffers:
            nbrs = [j for j in index.within(fp.centroid, buf) if j != i]
            for feat in BUFFERED_BUILDING_FEATURES:
                stats = aggregate(base[feat][nbrs] if nbrs else ())
                for agg in AGGREGATORS:
                    out[f"{feat}_{agg}_{int(buf)}m"][i] = stats[agg]
    return out


# ---------------------------------------------------------------------------
# street level

class StreetContext:
    """Shared lookups for street features: segment/node indexes, centralities."""

    def __init__(self, net, config: MorphometryConfig):
        if not net.segments:
            raise EmptyNetworkError("street features need a non-empty network")
        self.net = net
        self.config = config
        self._seg_index = SpatialIndex(
            (si, _polyline_bbox(seg.polyline),
             seg.polyline[len(seg.polyline) // 2])
            for si, seg in enumerate(net.segments))
        self._node_index = SpatialIndex(
            (ni, (p[0], p[1], p[0], p[1]), p) for ni, p in enumerate(net.nodes))
        self._intersections = net.intersection_nodes()
        if self._intersections:
            self._int_index = SpatialIndex(
                (ni, (net.nodes[ni][0], net.nodes[ni][1],
                      net.nodes[ni][0], net.nodes[ni][1]), net.nodes[ni])
                for ni in self._intersections)
        else:
            self._int_index = None
        self._betweenness = None
        self._closeness_cache: dict[int, float] = {}
        self._extent = max(
            max(b[2] for _, b, _ in self._seg_index._items)
            - min(b[0] for _, b, _ in self._seg_index._items),
            max(b[3] for _, b, _ in self._seg_index._items)
            - min(b[1] for _, b, _ in self._seg_index._items), 1.0)

    @property
    def betweenness(self):
        if self._betweenness is None:
            self._betweenness = centrality.betweenness(self.net)
        return self._betweenness

    def closeness(self, node: int) -> float:
        if node not in self._closeness_cache:
            self._closeness_cache[node] = centrality.closeness_within_radius(
                self.net, node, self.config.local_closeness_radius_m)
        return self._closeness_cache[node]

    def segment_distance(self, si: int, point) -> float:
        pl = self.net.segments[si].polyline
        return min(geometry.dist_point_segment(point, pl[i], pl[i + 1])[0]
                   for i in range(len(pl) - 1))

    def nearest_segment(self, point):
        """(segment index, distance); ties break on the lower index."""
        r = self._extent / 8.0
        while True:
            cands = self._seg_index.query_box(point[0] - r, point[1] - r,
                                              point[0] + r, point[1] + r)
            if cands:
                best = min(((self.segment_distance(si, point), si) for si in cands),
                           key=lambda t: (t[0], t[1]))
                if best[0] <= r:
                    # re-query to catch segments whose bbox missed the first box
                    sure = self._seg_index.query_box(
                        point[0] - best[0], point[1] - best[0],
                        point[0] + best[0], point[1] + best[0])
                    best = min(((self.segment_distance(si, point), si) for si in sure),
                               key=lambda t: (t[0], t[1]))
                    return (best[1], best[0])
            if r > 4.0 * self._extent:
                best = min(((self.segment_distance(si, point), si)
                            for si in range(len(self.net.segments))),
                           key=lambda t: (t[0], t[1]))
                return (best[1], best[0])
            r *= 2.0

    def nearest_node(self, point) -> int:
        return self._node_index.nearest(point, 1)[0]

    def nearest_intersection(self, point):
        """(node id, euclidean distance) or None when the graph has no
        degree>=3 nodes."""
        if self._int_index is None:
            return None
        ni = self._int_index.nearest(point, 1)[0]
        nx, ny = self.net.nodes[ni]
        return (ni, math.hypot(nx - point[0], ny - point[1]))

    def segments_within(self, point, radius):
        """[(segment index, distance)] for segments within radius of point."""
        cands = self._seg_index.query_box(point[0] - radius, point[1] - radius,
                                          point[0] + radius, point[1] + radius)
        out = []
        for si in cands:
            d = self.segment_distance(si, point)
            if d <= radius:
                out.append((si, d))
        return out

    def intersections_within(self, point, radius):
        """[(node id, euclidean distance)] within radius."""
        if self._int_index is None:
            return []
        out = []
        for ni in self._int_index.within(point, radius):
            nx, ny = self.net.nodes[ni]
            out.append((ni, math.hypot(nx - point[0], ny - point[1])))
        return out


def _polyline_bbox(pl):
    xs = [p[0] for p in pl]
    ys = [p[1] for p in pl]
    return (min(xs), min(ys), max(xs), max(ys))


def street_base_features(fp, net, config: MorphometryConfig | None = None,
                         ctx: StreetContext | None = None,
                         buildings_on_segment: float | None = None) -> dict:
    """The 9 street-level descriptors of one footprint.

    buildings_on_nearest_segment needs the whole building set; the standalone
    call reports 1.0 (the subject itself) unless a precomputed count is given.
    """
    if ctx is None:
        ctx = StreetContext(net, config or MorphometryConfig())
    c = fp.centroid
    si, dist_seg = ctx.nearest_segment(c)
    seg = ctx.net.segments[si]
    endpoint_dist = math.dist(seg.polyline[0], seg.polyline[-1])
    linearity = endpoint_dist / seg.length if seg.length > 0 else 0.0
    hit = ctx.nearest_intersection(c)
    if hit is None:
        dist_int, degree = 0.0, 0.0
    else:
        dist_int = hit[1]
        degree = float(ctx.net.degree(hit[0]))
    node = ctx.nearest_node(c)
    return {
        "nearest_segment_length": seg.length,
        "nearest_segment_width": seg.width_hint if seg.width_hint is not None
                                 else ctx.config.default_street_width_m,
        "distance_to_nearest_segment": dist_seg,
        "nearest_segment_linearity": linearity,
        "distance_to_nearest_intersection": dist_int,
        "nearest_intersection_degree": degree,
        "local_closeness": ctx.closeness(node),
        "betweenness": ctx.betweenness[node],
        "buildings_on_nearest_segment": buildings_on_segment
                                        if buildings_on_segment is not None else 1.0,
    }


def all_street_base(footprints, net, config: MorphometryConfig, ctx=None, workers=1):
    """Street base features for every footprint, plus the per-building nearest
    segment index (reused by the buffered pass)."""
    if ctx is None:
        ctx = StreetContext(net, config)
    rows = _pmap(lambda fp: street_base_features(fp, net, config, ctx), footprints, workers)
    nearest = [ctx.nearest_segment(fp.centroid)[0] for fp in footprints]
    counts: dict[int, int] = {}
    for si in nearest:
        counts[si] = counts.get(si, 0) + 1
    for row, si in zip(rows, nearest):
        row["buildings_on_nearest_segment"] = float(counts[si])
    out = {name: np.array([r[name] for r in rows]) for name in STREET_BASE_NAMES}
    return out, ctx, nearest


def street_buffered_aggregates(footprints, ctx: StreetContext, buffers) -> dict:
    """11 values per buffer: aggregates of distances to the street segments in
    the buffer, of their lengths, of euclidean distances to the intersections
    in the buffer, plus the two object counts."""
    n = len(footprints)
    out = {}
    for buf in buffers:
        b = int(buf)
        for agg in AGGREGATORS:
            out[f"segment_distance_{agg}_{b}m"] = np.zeros(n)
            out[f"segment_length_{agg}_{b}m"] = np.zeros(n)
            out[f"intersection_distance_{agg}_{b}m"] = np.zeros(n)
        out[f"segment_count_{b}m"] = np.zeros(n)
        out[f"intersection_count_{b}m"] = np.zeros(n)
    for i, fp in enumerate(footprints):
        c = fp.centroid
        for buf in buffers:
            b = int(buf)
            segs = ctx.segments_within(c, buf)
            ints = ctx.intersections_within(c, buf)
            seg_d = aggregate([d for _si, d in segs])
            seg_l = aggregate([ctx.net.segments[si].length for si, _d in segs])
            int_d = aggregate([d for _ni, d in ints])
            for agg in AGGREGATORS:
                out[f"segment_distance_{agg}_{b}m"][i] = seg_d[agg]
                out[f"segment_length_{agg}_{b}m"][i] = seg_l[agg]
                out[f"intersection_distance_{agg}_{b}m"][i] = int_d[agg]
            out[f"segment_count_{b}m"][i] = float(len(segs))
            out[f"intersection_count_{b}m"][i] = float(len(ints))
    return out


# ---------------------------------------------------------------------------
# block level

def block_shape_features(block) -> dict:
    """8 shape values of a block; zeros for the synthetic unbounded block."""
    if not block.bounded:
        return {name: 0.0 for name in BLOCK_SHAPE_NAMES}
    desc = shape_descriptors(block.ring)
    return {
        "block_area": desc["area"],
        "block_perimeter": desc["perimeter"],
        "block_convexity": desc["convexity"],
        "block_circular_compactness": desc["circular_compactness"],
        "block_orientation": desc["orientation"],
        "block_corner_count": desc["corner_count"],
        "block_longest_axis_length": desc["longest_axis_length"],
        "block_equivalent_rectangular_index": desc["equivalent_rectangular_index"],
    }


def block_containment_features(block, area_by_id: dict) -> dict:
    areas = [area_by_id[bid] for bid in block.building_ids]
    stats = aggregate(areas)
    return {
        "block_building_count": float(len(areas)),
        "block_building_area_total": stats["total"],
        "block_building_area_mean": stats["mean"],
        "block_building_area_std": stats["std"],
    }


def block_features(block, footprints) -> dict:
    """The 12 block-level values (8 shape + 4 containment) of one block."""
    area_by_id = {fp.id: fp.area for fp in footprints}
    out = block_shape_features(block)
    out.update(block_containment_features(block, area_by_id))
    return out


def all_block_features(footprints, net):
    """Per-building block features inherited from the containing block.

    Returns (values dict, assigned blocks including the unbounded one)."""
    blocks = assign_buildings(tessellate_blocks(net), footprints)
    area_by_id = {fp.id: fp.area for fp in footprints}
    per_block = {}
    for b in blocks:
        feats = block_shape_features(b)
        feats.update(block_containment_features(b, area_by_id))
        per_block[b.id] = feats
    block_of = {fid: b.id for b in blocks for fid in b.building_ids}
    names = BLOCK_SHAPE_NAMES + BLOCK_CONTAINMENT_NAMES
    out = {name: np.array([per_block[block_of[fp.id]][name] for fp in footprints])
           for name in names}
    return out, blocks


def block_buffered_names(buffers) -> list:
    names = []
    for buf in buffers:
        b = int(buf)
        names += [f"block_count_{b}m", f"block_area_total_{b}m",
                  f"block_area_mean_{b}m", f"block_area_std_{b}m"]
    widest = int(buffers[-1])
    names += [f"block_corner_count_mean_{widest}m", f"block_corner_count_std_{widest}m"]
    return names


def block_buffered_aggregates(footprints, blocks, buffers) -> dict:
    """14 second-order block values per building: per-buffer count and area
    aggregates over bounded blocks whose centroid falls in the buffer, plus
    corner-count mean/std at the widest buffer."""
    bounded = [b for b in blocks if b.bounded]
    names = block_buffered_names(buffers)
    n = len(footprints)
    out = {name: np.zeros(n) for name in names}
    if bounded:
        cents = [b.centroid for b in bounded]
        areas = np.array([b.area for b in bounded])
        corners = np.array([float(geometry.corner_count(b.ring)) for b in bounded])
        b_index = SpatialIndex((k, (c[0], c[1], c[0], c[1]), c)
                               for k, c in enumerate(cents))
    widest = buffers[-1]
    for i, fp in enumerate(footprints):
        c = fp.centroid
        for buf in buffers:
            b = int(buf)
            members = b_index.within(c, buf) if bounded else []
            stats = aggregate(areas[members] if members else ())
            out[f"block_count_{b}m"][i] = float(len(members))
            out[f"block_area_total_{b}m"][i] = stats["total"]
            out[f"block_area_mean_{b}m"][i] = stats["mean"]
            out[f"block_area_std_{b}m"][i] = stats["std"]
            if buf == widest:
                cstats = aggregate(corners[members] if members else ())
                out[f"block_corner_count_mean_{int(widest)}m"][i] = cstats["mean"]
                out[f"block_corner_count_std_{int(widest)}m"][i] = cstats["std"]
    return out


# ---------------------------------------------------------------------------

def _pmap(fn, items, workers):
    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(item) for item in items]
