"""Planar geometry primitives used across the pipeline.

All coordinates are metric (x east, y north). Rings are sequences of
(x, y) tuples; a "closed" ring repeats its first point at the end. Most
helpers accept either form and ignore the duplicate closing point.
"""

from __future__ import annotations

import math

Pt = tuple[float, float]


def open_ring(ring) -> list[Pt]:
    """Return the ring without a duplicate closing point."""
    pts = [(float(p[0]), float(p[1])) for p in ring]
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts.pop()
    return pts


def close_ring(ring) -> list[Pt]:
    pts = [(float(p[0]), float(p[1])) for p in ring]
    if pts and pts[0] != pts[-1]:
        pts.append(pts[0])
    return pts


def signed_area(ring) -> float:
    """Shoelace signed area; positive for counter-clockwise rings."""
    pts = open_ring(ring)
    n = len(pts)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return 0.5 * acc


def ring_area(ring) -> float:
    return abs(signed_area(ring))


def ring_perimeter(ring) -> float:
    pts = open_ring(ring)
    n = len(pts)
    if n < 2:
        return 0.0
    return sum(math.dist(pts[i], pts[(i + 1) % n]) for i in range(n))


def ring_centroid(ring) -> Pt:
    """Area-weighted centroid; falls back to the vertex mean for degenerate rings."""
    pts = open_ring(ring)
    n = len(pts)
    a = signed_area(pts)
    if n == 0:
        raise ValueError("empty ring")
    if abs(a) < 1e-12:
        return (sum(p[0] for p in pts) / n, sum(p[1] for p in pts) / n)
    cx = cy = 0.0
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        cross = x1 * y2 - x2 * y1
        cx += (x1 + x2) * cross
        cy += (y1 + y2) * cross
    return (cx / (6.0 * a), cy / (6.0 * a))


def polygon_area(exterior, holes=()) -> float:
    return ring_area(exterior) - sum(ring_area(h) for h in holes)


def polygon_centroid(exterior, holes=()) -> Pt:
    """Centroid of a polygon with holes (holes subtract area weight)."""
    a_ext = ring_area(exterior)
    cx, cy = ring_centroid(exterior)
    num_x = cx * a_ext
    num_y = cy * a_ext
    denom = a_ext
    for h in holes:
        a_h = ring_area(h)
        hx, hy = ring_centroid(h)
        num_x -= hx * a_h
        num_y -= hy * a_h
        denom -= a_h
    if denom <= 0:
        return ring_centroid(exterior)
    return (num_x / denom, num_y / denom)


def orient_ring(ring, ccw=True) -> list[Pt]:
    """Return the ring (open form) with the requested winding."""
    pts = open_ring(ring)
    if (signed_area(pts) > 0) != ccw:
        pts = pts[::-1]
    return pts


def dedupe_ring(ring, tol=1e-9) -> list[Pt]:
    """Drop consecutive vertices closer than tol (open form, wrap-around included)."""
    pts = open_ring(ring)
    out: list[Pt] = []
    for p in pts:
        if not out or math.dist(out[-1], p) >= tol:
            out.append(p)
    while len(out) > 1 and math.dist(out[0], out[-1]) < tol:
        out.pop()
    return out


def convex_hull(points) -> list[Pt]:
    """Andrew's monotone chain. Returns hull vertices counter-clockwise, no repeat."""
    pts = sorted(set((float(p[0]), float(p[1])) for p in points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[Pt] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Pt] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _circle_two(a: Pt, b: Pt):
    cx = (a[0] + b[0]) / 2.0
    cy = (a[1] + b[1]) / 2.0
    return (cx, cy, math.dist(a, b) / 2.0)


def _circle_three(a: Pt, b: Pt, c: Pt):
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-18:
        return None
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
          + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
          + (cx * cx + cy * cy) * (bx - ax)) / d
    return (ux, uy, math.dist((ux, uy), a))


def _in_circle(circle, p: Pt, eps=1e-9) -> bool:
    if circle is None:
        return False
    return math.dist((circle[0], circle[1]), p) <= circle[2] * (1 + eps) + eps


def min_enclosing_circle(points) -> tuple[float, float, float]:
    """Smallest circle containing all points, as (cx, cy, radius).

    Welzl's move-to-front algorithm run over the convex hull vertices in
    deterministic order (hulls here are small, so no random shuffle is needed).
    """
    pts = convex_hull(points)
    if not pts:
        raise ValueError("no points")
    if len(pts) == 1:
        return (pts[0][0], pts[0][1], 0.0)

    circle = None
    for i, p in enumerate(pts):
        if _in_circle(circle, p):
            continue
        circle = (p[0], p[1], 0.0)
        for j in range(i):
            q = pts[j]
            if _in_circle(circle, q):
                continue
            circle = _circle_two(p, q)
            for k in range(j):
                r = pts[k]
                if _in_circle(circle, r):
                    continue
                c3 = _circle_three(p, q, r)
                if c3 is not None:
                    circle = c3
    return circle


def min_area_rectangle(points):
    """Minimum-area rotated rectangle via rotating calipers over the hull.

    Returns (corners, long_side, short_side, long_axis_angle_rad) where the
    angle is measured from the +x axis in [0, pi).
    """
    hull = convex_hull(points)
    if len(hull) == 1:
        p = hull[0]
        return ([p, p, p, p], 0.0, 0.0, 0.0)
    if len(hull) == 2:
        a, b = hull
        ang = math.atan2(b[1] - a[1], b[0] - a[0]) % math.pi
        return ([a, b, b, a], math.dist(a, b), 0.0, ang)

    best = None
    n = len(hull)
    for i in range(n):
        ax, ay = hull[i]
        bx, by = hull[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        norm = math.hypot(ex, ey)
        if norm == 0:
            continue
        ux, uy = ex / norm, ey / norm  # edge direction
        vx, vy = -uy, ux               # perpendicular
        us = [(p[0] - ax) * ux + (p[1] - ay) * uy for p in hull]
        vs = [(p[0] - ax) * vx + (p[1] - ay) * vy for p in hull]
        umin, umax = min(us), max(us)
        vmin, vmax = min(vs), max(vs)
        area = (umax - umin) * (vmax - vmin)
        if best is None or area < best[0]:
            best = (area, ax, ay, ux, uy, vx, vy, umin, umax, vmin, vmax)

    _, ax, ay, ux, uy, vx, vy, umin, umax, vmin, vmax = best
    corners = []
    for u, v in ((umin, vmin), (umax, vmin), (umax, vmax), (umin, vmax)):
        corners.append((ax + u * ux + v * vx, ay + u * uy + v * vy))
    du = umax - umin
    dv = vmax - vmin
    if du >= dv:
        long_side, short_side = du, dv
        ang = math.atan2(uy, ux) % math.pi
    else:
        long_side, short_side = dv, du
        ang = math.atan2(vy, vx) % math.pi
    return (corners, long_side, short_side, ang)


def deviation_from_cardinal(angle_rad: float) -> float:
    """Fold an axis direction into its deviation in degrees from the nearest
    cardinal direction, in [0, 45]."""
    deg = math.degrees(angle_rad) % 90.0
    return 90.0 - deg if deg > 45.0 else deg


def point_in_ring(p: Pt, ring) -> bool:
    """Even-odd crossing test; points exactly on the boundary are not guaranteed
    either way (use point_on_ring for boundary checks)."""
    pts = open_ring(ring)
    n = len(pts)
    x, y = p
    inside = False
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xin = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if x < xin:
                inside = not inside
    return inside


def point_on_ring(p: Pt, ring, tol=1e-9) -> bool:
    pts = open_ring(ring)
    n = len(pts)
    for i in range(n):
        if dist_point_segment(p, pts[i], pts[(i + 1) % n])[0] <= tol:
            return True
    return False


def point_in_polygon(p: Pt, exterior, holes=()) -> bool:
    """Even-odd containment honouring holes; boundary behaviour unspecified."""
    if not point_in_ring(p, exterior):
        return False
    return not any(point_in_ring(p, h) for h in holes)


def point_strictly_in_polygon(p: Pt, exterior, holes=(), tol=1e-9) -> bool:
    """Inside the polygon and further than tol from every boundary segment."""
    if point_on_ring(p, exterior, tol):
        return False
    for h in holes:
        if point_on_ring(p, h, tol):
            return False
    return point_in_polygon(p, exterior, holes)


def dist_point_segment(p: Pt, a: Pt, b: Pt):
    """Distance from p to segment ab. Returns (distance, t, foot) with
    foot = a + t*(b-a), t clamped to [0, 1]."""
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return (math.dist(p, a), 0.0, a)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    foot = (ax + t * dx, ay + t * dy)
    return (math.dist(p, foot), t, foot)


def segment_intersections(a1: Pt, a2: Pt, b1: Pt, b2: Pt, eps=1e-12):
    """Intersection parameters between segments a and b.

    Returns a list of (t, u) pairs with the meeting point at a1 + t*(a2-a1) =
    b1 + u*(b2-b1), t and u in [0, 1]. A proper or touching intersection yields
    one pair; collinear overlap yields the two overlap endpoints.
    """
    ax, ay = a1
    bx, by = a2
    cx, cy = b1
    dx, dy = b2
    r = (bx - ax, by - ay)
    s = (dx - cx, dy - cy)
    denom = r[0] * s[1] - r[1] * s[0]
    qpx, qpy = cx - ax, cy - ay
    qpxr = qpx * r[1] - qpy * r[0]

    scale = max(abs(r[0]), abs(r[1]), abs(s[0]), abs(s[1]), 1.0)
    tol = eps * scale * scale

    if abs(denom) <= tol:
        if abs(qpxr) > tol:
            return []  # parallel, disjoint lines
        # collinear: project b's endpoints on a
        rr = r[0] * r[0] + r[1] * r[1]
        if rr == 0.0:
            return []
        t0 = (qpx * r[0] + qpy * r[1]) / rr
        t1 = ((dx - ax) * r[0] + (dy - ay) * r[1]) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        lo = max(lo, 0.0)
        hi = min(hi, 1.0)
        if lo > hi + eps:
            return []
        ss = s[0] * s[0] + s[1] * s[1]

        def u_of(t):
            px = ax + t * r[0] - cx
            py = ay + t * r[1] - cy
            return (px * s[0] + py * s[1]) / ss

        out = [(lo, u_of(lo))]
        if hi - lo > eps:
            out.append((hi, u_of(hi)))
        return out

    t = (qpx * s[1] - qpy * s[0]) / denom
    u = qpxr / denom
    pad = 1e-12
    if -pad <= t <= 1 + pad and -pad <= u <= 1 + pad:
        t = min(max(t, 0.0), 1.0)
        u = min(max(u, 0.0), 1.0)
        return [(t, u)]
    return []


def ray_segment_intersection(origin: Pt, direction: Pt, a: Pt, b: Pt, eps=1e-12):
    """Smallest t >= 0 with origin + t*direction on segment ab, or None.

    direction must be a unit vector, so t is the hit distance. Collinear
    (grazing) rays hit at the nearest endpoint lying ahead of the origin.
    """
    ox, oy = origin
    dx, dy = direction
    sx, sy = b[0] - a[0], b[1] - a[1]
    denom = dx * sy - dy * sx
    qpx, qpy = a[0] - ox, a[1] - oy
    if abs(denom) <= eps:
        # parallel; collinear only if a-origin is parallel to direction too
        if abs(qpx * dy - qpy * dx) > eps * max(1.0, abs(qpx), abs(qpy)):
            return None
        ta = qpx * dx + qpy * dy
        tb = (b[0] - ox) * dx + (b[1] - oy) * dy
        cands = [t for t in (ta, tb) if t >= 0.0]
        return min(cands) if cands else None
    t = (qpx * sy - qpy * sx) / denom
    u = (qpx * dy - qpy * dx) / denom
    if t >= 0.0 and -eps <= u <= 1.0 + eps:
        return t
    return None


def corner_count(ring, angle_tol_deg=10.0) -> int:
    """Vertices whose interior angle deviates more than angle_tol_deg from a
    straight 180 degrees."""
    pts = dedupe_ring(ring)
    n = len(pts)
    if n < 3:
        return 0
    count = 0
    for i in range(n):
        p_prev = pts[(i - 1) % n]
        p = pts[i]
        p_next = pts[(i + 1) % n]
        v1 = (p_prev[0] - p[0], p_prev[1] - p[1])
        v2 = (p_next[0] - p[0], p_next[1] - p[1])
        n1 = math.hypot(*v1)
        n2 = math.hypot(*v2)
        if n1 == 0 or n2 == 0:
            continue
        cosang = max(-1.0, min(1.0, (v1[0] * v2[0] + v1[1] * v2[1]) / (n1 * n2)))
        ang = math.degrees(math.acos(cosang))
        if abs(180.0 - ang) > angle_tol_deg:
            count += 1
    return count


def _tri_eps(a, b, c):
    scale = max(abs(b[0] - a[0]), abs(b[1] - a[1]), abs(c[0] - a[0]),
                abs(c[1] - a[1]), abs(c[0] - b[0]), abs(c[1] - b[1]), 1e-12)
    return 1e-12 * scale * scale


def _point_in_triangle(p, a, b, c, eps):
    """Closed-triangle test: boundary points count as inside."""
    d1 = (p[0] - b[0]) * (a[1] - b[1]) - (a[0] - b[0]) * (p[1] - b[1])
    d2 = (p[0] - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (p[1] - c[1])
    d3 = (p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])
    has_neg = (d1 < -eps) or (d2 < -eps) or (d3 < -eps)
    has_pos = (d1 > eps) or (d2 > eps) or (d3 > eps)
    return not (has_neg and has_pos)


def _ear_blocked(work, i):
    """Another vertex lies inside or on the candidate ear triangle.
    Vertices coincident with an ear corner (bridge duplicates) do not block."""
    n = len(work)
    a, b, c = work[(i - 1) % n], work[i], work[(i + 1) % n]
    eps = _tri_eps(a, b, c)
    for j in range(n):
        if j in ((i - 1) % n, i, (i + 1) % n):
            continue
        q = work[j]
        if q == a or q == b or q == c:
            continue
        if _point_in_triangle(q, a, b, c, eps):
            return True
    return False


def ear_clip(ring):
    """Triangulate a polygon ring by ear clipping.

    Accepts any winding (including rings with bridge-duplicated vertices from
    bridge_holes); triangles come back as CCW coordinate triples, exactly
    n - 2 of them. Collinear vertices are clipped as zero-area triangles so
    that triangulation edges always match the ring edges, which prism walls
    rely on. Raises ValueError when no ear exists (self-intersecting input).
    """
    pts = orient_ring(open_ring(ring), ccw=True)
    if len(pts) < 3:
        raise ValueError("ring with fewer than 3 distinct vertices")
    triangles = []
    work = list(pts)
    while len(work) > 3:
        n = len(work)
        clipped = False
        degenerate = None
        for i in range(n):
            a, b, c = work[(i - 1) % n], work[i], work[(i + 1) % n]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            eps = _tri_eps(a, b, c)
            if cross < -eps:
                continue  # reflex
            if cross <= eps:
                if degenerate is None:
                    degenerate = i
                continue
            if not _ear_blocked(work, i):
                triangles.append((a, b, c))
                del work[i]
                clipped = True
                break
        if clipped:
            continue
        if degenerate is not None:
            i = degenerate
            a, b, c = work[(i - 1) % n], work[i], work[(i + 1) % n]
            triangles.append((a, b, c))
            del work[i]
            continue
        raise ValueError("no ear found (self-intersecting ring?)")
    triangles.append((work[0], work[1], work[2]))
    return triangles


def bridge_holes(exterior, holes):
    """Merge hole rings into the exterior via bridge edges, producing one ring
    suitable for ear clipping.

    Classic approach: connect each hole's rightmost vertex to a visible vertex
    of the current outer ring, duplicating the two bridge endpoints.
    """
    outer = orient_ring(dedupe_ring(exterior), ccw=True)
    remaining = [orient_ring(dedupe_ring(h), ccw=False) for h in holes if len(dedupe_ring(h)) >= 3]
    # process holes right-to-left so bridges cannot cross earlier ones
    remaining.sort(key=lambda h: -max(p[0] for p in h))
    for n_done, hole in enumerate(remaining):
        hi = max(range(len(hole)), key=lambda i: (hole[i][0], hole[i][1]))
        hp = hole[hi]
        # nearest outer vertex reachable without crossing any ring
        obstacles = [outer, hole] + remaining[n_done + 1:]
        best = None
        for oi, op in enumerate(outer):
            if _segment_clear(hp, op, obstacles):
                d = math.dist(hp, op)
                if best is None or d < best[0]:
                    best = (d, oi)
        if best is None:
            raise ValueError("cannot bridge hole to exterior")
        oi = best[1]
        rotated_hole = hole[hi:] + hole[:hi]
        outer = outer[:oi + 1] + [hp] + rotated_hole[1:] + [hp, outer[oi]] + outer[oi + 1:]
    return outer


def _segment_clear(p, q, rings):
    """True when segment pq meets the rings only at its own endpoints."""
    for ring in rings:
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            for t, _u in segment_intersections(p, q, a, b):
                mid = (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))
                if math.dist(mid, p) > 1e-9 and math.dist(mid, q) > 1e-9:
                    return False
    return True
