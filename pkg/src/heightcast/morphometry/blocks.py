"""Street-block tessellation: bounded faces of the noded street graph.

Faces are extracted by angular half-edge traversal on the 2-edge-connected
core of the graph (dangling spurs are pruned first, so a tree network has
no blocks). Interior faces come out counter-clockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .. import geometry

UNBOUNDED_BLOCK_ID = "block:unbounded"
MIN_FACE_AREA = 1e-9


@dataclass
class Block:
    id: str
    ring: list            # closed CCW ring; empty for the unbounded block
    building_ids: list = field(default_factory=list)

    @property
    def bounded(self) -> bool:
        return bool(self.ring)

    @property
    def area(self) -> float:
        return geometry.ring_area(self.ring) if self.ring else 0.0

    @property
    def centroid(self):
        return geometry.ring_centroid(self.ring) if self.ring else None


def _pruned_adjacency(net):
    """Adjacency lists with degree<=1 nodes iteratively removed."""
    adj = [list(nbrs) for nbrs in net.adjacency]
    changed = True
    while changed:
        changed = False
        for v in range(len(adj)):
            if len(adj[v]) == 1:
                w, eidx = adj[v][0]
                adj[v] = []
                adj[w] = [(u, e) for u, e in adj[w] if e != eidx]
                changed = True
    return adj


def extract_faces(net):
    """Bounded faces of the planar street graph, as closed CCW rings."""
    adj = _pruned_adjacency(net)

    # half-edge = (edge_idx, forward); forward means edge.points order
    outgoing: dict[int, list] = {v: [] for v in range(len(net.nodes))}
    for v in range(len(net.nodes)):
        for _w, eidx in adj[v]:
            edge = net.edges[eidx]
            if edge.a == edge.b:
                # loops contribute both directions at their single node
                continue
            if edge.a == v:
                outgoing[v].append((eidx, True))
            else:
                outgoing[v].append((eidx, False))
    handled_loops = set()
    for v in range(len(net.nodes)):
        for _w, eidx in adj[v]:
            edge = net.edges[eidx]
            if edge.a == edge.b and eidx not in handled_loops:
                handled_loops.add(eidx)
                outgoing[v].append((eidx, True))
                outgoing[v].append((eidx, False))

    def departure_angle(half):
        eidx, forward = half
        pts = net.edges[eidx].points
        a, b = (pts[0], pts[1]) if forward else (pts[-1], pts[-2])
        return math.atan2(b[1] - a[1], b[0] - a[0])

    def tail(half):
        eidx, forward = half
        return net.edges[eidx].a if forward else net.edges[eidx].b

    def head(half):
        eidx, forward = half
        return net.edges[eidx].b if forward else net.edges[eidx].a

    rotation: dict[int, list] = {}
    position: dict[tuple, int] = {}
    for v, halves in outgoing.items():
        halves.sort(key=departure_angle)
        rotation[v] = halves
        for i, h in enumerate(halves):
            position[(v, h)] = i

    def next_half(half):
        w = head(half)
        twin = (half[0], not half[1])
        pos = position[(w, twin)]
        rot = rotation[w]
        return rot[(pos - 1) % len(rot)]

    faces = []
    visited = set()
    for v in sorted(rotation.keys()):
        for start in rotation[v]:
            if start in visited or tail(start) != v:
                continue
            cycle = []
            h = start
            while h not in visited:
                visited.add(h)
                cycle.append(h)
                h = next_half(h)
            ring: list = []
            for eidx, forward in cycle:
                pts = net.edges[eidx].points
                pts = list(pts) if forward else list(reversed(pts))
                if ring:
                    pts = pts[1:]
                ring.extend(pts)
            if len(ring) > 1 and math.dist(ring[0], ring[-1]) < 1e-9:
                ring.pop()
            if len(ring) >= 3 and geometry.signed_area(ring) > MIN_FACE_AREA:
                faces.append(geometry.close_ring(ring))
    return faces


def tessellate_blocks(net) -> list[Block]:
    """Blocks in deterministic order (sorted by centroid, then area)."""
    faces = extract_faces(net)
    faces.sort(key=lambda r: (geometry.ring_centroid(r), geometry.ring_area(r)))
    return [Block(f"block:{i}", ring) for i, ring in enumerate(faces)]


def assign_buildings(blocks, footprints) -> list[Block]:
    """Assign footprints to blocks by centroid containment.

    Nested faces resolve to the smallest containing block. Buildings outside
    every face share one synthetic unbounded block, appended last.
    """
    for b in blocks:
        b.building_ids = []
    unbounded = Block(UNBOUNDED_BLOCK_ID, [])
    for fp in footprints:
        c = fp.centroid
        best = None
        for b in blocks:
            if not b.bounded:
                continue
            ring = b.ring
            xs = [p[0] for p in ring]
            ys = [p[1] for p in ring]
            if not (min(xs) <= c[0] <= max(xs) and min(ys) <= c[1] <= max(ys)):
                continue
            if geometry.point_in_ring(c, ring):
                if best is None or b.area < best.area:
                    best = b
        if best is None:
            unbounded.building_ids.append(fp.id)
        else:
            best.building_ids.append(fp.id)
    return list(blocks) + [unbounded]
