"""Shortest-path centralities on the noded street graph.

Distances are edge polyline lengths in metres. Equal-length alternative
paths are matched with a small absolute tolerance so that symmetric grids
do not fall apart over float rounding.
"""

from __future__ import annotations

import heapq
import math

EQUAL_PATH_EPS = 1e-9


def dijkstra(net, source: int, cutoff: float | None = None) -> dict[int, float]:
    """Distances from source; nodes beyond cutoff are omitted."""
    dist = {source: 0.0}
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for w, eidx in net.adjacency[v]:
            nd = d + net.edges[eidx].length
            if cutoff is not None and nd > cutoff + EQUAL_PATH_EPS:
                continue
            if w not in dist or nd < dist[w] - EQUAL_PATH_EPS:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


def closeness_within_radius(net, node: int, radius: float) -> float:
    """Closeness centrality of node on its network neighbourhood.

    Computed as k / sum(d) over the k other nodes within network distance
    radius; 0.0 when the node reaches nothing.
    """
    dist = dijkstra(net, node, cutoff=radius)
    total = 0.0
    count = 0
    for other, d in dist.items():
        if other == node:
            continue
        total += d
        count += 1
    if count == 0 or total <= 0:
        return 0.0
    return count / total


def betweenness(net) -> list[float]:
    """Brandes betweenness for every node, normalized for an undirected graph
    (factor 2 / ((n-1)(n-2)))."""
    n = len(net.nodes)
    bc = [0.0] * n
    if n < 3:
        return bc
    for s in range(n):
        sigma = [0.0] * n
        sigma[s] = 1.0
        dist = [math.inf] * n
        dist[s] = 0.0
        preds: list[list[int]] = [[] for _ in range(n)]
        order: list[int] = []
        done = [False] * n
        heap = [(0.0, s)]
        while heap:
            d, v = heapq.heappop(heap)
            if done[v]:
                continue
            done[v] = True
            order.append(v)
            for w, eidx in net.adjacency[v]:
                nd = d + net.edges[eidx].length
                if nd < dist[w] - EQUAL_PATH_EPS:
                    dist[w] = nd
                    sigma[w] = sigma[v]
                    preds[w] = [v]
                    heapq.heappush(heap, (nd, w))
                elif abs(nd - dist[w]) <= EQUAL_PATH_EPS and not done[w]:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    scale = 1.0 / ((n - 1) * (n - 2))  # halves the double-counted pairs too
    return [b * scale for b in bc]
