"""Uniform-grid spatial index over axis-aligned bounding boxes.

Query results are defined to be identical to a linear scan: box queries
return items in insertion order, nearest-neighbour queries order by
(centroid distance, insertion order).
"""

from __future__ import annotations

import math


class SpatialIndex:
    """Grid index over items with a bounding box and a representative point."""

    def __init__(self, items):
        """items: iterable of (key, bbox, centroid) with bbox = (minx, miny, maxx, maxy)."""
        self._items = [(key, tuple(map(float, bbox)), (float(c[0]), float(c[1])))
                       for key, bbox, c in items]
        if not self._items:
            raise ValueError("spatial index needs at least one item")
        self._minx = min(b[0] for _, b, _ in self._items)
        self._miny = min(b[1] for _, b, _ in self._items)
        maxx = max(b[2] for _, b, _ in self._items)
        maxy = max(b[3] for _, b, _ in self._items)
        n = len(self._items)
        span = max(maxx - self._minx, maxy - self._miny, 1e-9)
        # aim for a few items per cell
        self._cell = span / max(1.0, math.sqrt(n))
        self._nx = int((maxx - self._minx) / self._cell) + 1
        self._ny = int((maxy - self._miny) / self._cell) + 1
        self._grid: dict[tuple[int, int], list[int]] = {}
        for idx, (_key, bbox, _c) in enumerate(self._items):
            for cell in self._cells_for_box(bbox):
                self._grid.setdefault(cell, []).append(idx)

    def __len__(self):
        return len(self._items)

    def _cell_of(self, x, y):
        cx = int((x - self._minx) / self._cell)
        cy = int((y - self._miny) / self._cell)
        return (min(max(cx, 0), self._nx - 1), min(max(cy, 0), self._ny - 1))

    def _cells_for_box(self, bbox):
        c0 = self._cell_of(bbox[0], bbox[1])
        c1 = self._cell_of(bbox[2], bbox[3])
        for cx in range(c0[0], c1[0] + 1):
            for cy in range(c0[1], c1[1] + 1):
                yield (cx, cy)

    def query_box(self, minx, miny, maxx, maxy):
        """Keys of all items whose bbox intersects the query box, in insertion order."""
        seen = set()
        for cell in self._cells_for_box((minx, miny, maxx, maxy)):
            for idx in self._grid.get(cell, ()):
                seen.add(idx)
        out = []
        for idx in sorted(seen):
            b = self._items[idx][1]
            if b[0] <= maxx and b[2] >= minx and b[1] <= maxy and b[3] >= miny:
                out.append(self._items[idx][0])
        return out

    def nearest(self, point, k=1):
        """k nearest item keys by centroid distance, ties broken by insertion order."""
        px, py = float(point[0]), float(point[1])
        k = min(k, len(self._items))
        cx, cy = self._cell_of(px, py)
        found: dict[int, float] = {}
        ring = 0
        max_ring = max(self._nx, self._ny)
        while True:
            for gx in range(cx - ring, cx + ring + 1):
                for gy in range(cy - ring, cy + ring + 1):
                    if max(abs(gx - cx), abs(gy - cy)) != ring:
                        continue
                    for idx in self._grid.get((gx, gy), ()):
                        if idx not in found:
                            c = self._items[idx][2]
                            found[idx] = math.hypot(c[0] - px, c[1] - py)
            if len(found) >= k:
                # safe once the ring boundary is farther than the kth distance
                kth = sorted(found.values())[k - 1]
                if ring * self._cell >= kth or ring > max_ring:
                    break
            elif ring > max_ring:
                break
            ring += 1
        order = sorted(found.items(), key=lambda it: (it[1], it[0]))
        return [self._items[idx][0] for idx, _d in order[:k]]

    def within(self, point, radius):
        """Keys of items whose centroid lies within radius of point
        (distance <= radius), in insertion order."""
        px, py = float(point[0]), float(point[1])
        out = []
        seen = set()
        for cell in self._cells_for_box((px - radius, py - radius, px + radius, py + radius)):
            for idx in self._grid.get(cell, ()):
                seen.add(idx)
        for idx in sorted(seen):
            c = self._items[idx][2]
            if math.hypot(c[0] - px, c[1] - py) <= radius:
                out.append(self._items[idx][0])
        return out
