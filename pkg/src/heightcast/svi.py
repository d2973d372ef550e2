"""Street-view image handling: camera metadata parsing and assignment of
each image to the footprint its camera faces, by 2D ray casting along the
compass bearing.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from . import geometry
from .errors import InputError, InsideBuildingError
from .geodata import GeoPoint

log = logging.getLogger(__name__)

DEFAULT_MAX_RANGE_M = 100.0

CAMERA_TYPES = ("perspective", "fisheye", "equirectangular")


@dataclass(frozen=True)
class CameraRecord:
    image_id: str
    position: tuple           # planar metres
    compass_angle: float      # degrees clockwise from north, [0, 360)
    altitude: float | None = None
    camera_type: str = "perspective"
    captured_at: int | None = None      # epoch milliseconds
    camera_parameters: tuple | None = None   # (focal, k1, k2)


@dataclass(frozen=True)
class Assignment:
    image_id: str
    building_id: str
    hit_point: tuple
    hit_distance: float


def parse_camera_metadata(record: dict, projection) -> CameraRecord:
    """Build a CameraRecord from one Mapillary-v4-shaped JSON record.

    Raises InputError naming the missing field; compass angles outside
    [0, 360) are normalized modulo 360 with a warning.
    """
    for field in ("id", "computed_geometry", "computed_compass_angle"):
        if record.get(field) is None:
            raise InputError(f"camera record missing required field: {field}")
    geom = record["computed_geometry"]
    coords = (geom or {}).get("coordinates")
    if not coords or len(coords) < 2:
        raise InputError("camera record missing required field: computed_geometry")
    position = projection.project(GeoPoint(float(coords[0]), float(coords[1])))
    angle = float(record["computed_compass_angle"])
    if not (0.0 <= angle < 360.0):
        normalized = angle % 360.0
        log.warning("image %s: compass angle %s normalized to %s",
                    record["id"], angle, normalized)
        angle = normalized
    camera_type = record.get("camera_type", "perspective")
    if camera_type not in CAMERA_TYPES:
        camera_type = "perspective"
    params = record.get("camera_parameters")
    return CameraRecord(
        image_id=str(record["id"]),
        position=position,
        compass_angle=angle,
        altitude=(float(record["computed_altitude"])
                  if record.get("computed_altitude") is not None else None),
        camera_type=camera_type,
        captured_at=(int(record["captured_at"])
                     if record.get("captured_at") is not None else None),
        camera_parameters=tuple(float(v) for v in params) if params else None,
    )


def read_camera_records(path, projection, allowlist=None):
    """Parse a JSON-lines file of Mapillary records.

    Returns (records, skipped) where skipped lists {line, reason} entries.
    With an allowlist (set of image ids), other images are dropped silently,
    mirroring a manual image curation step.
    """
    records = []
    skipped = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read camera file {path}: {exc}") from exc
    for ln, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except ValueError:
            skipped.append({"line": ln, "reason": "invalid JSON"})
            continue
        if allowlist is not None and str(raw.get("id")) not in allowlist:
            continue
        try:
            records.append(parse_camera_metadata(raw, projection))
        except InputError as exc:
            skipped.append({"line": ln, "reason": str(exc)})
    return records, skipped


def bearing_to_direction(compass_angle: float):
    """Unit (east, north) vector for a compass bearing in degrees."""
    rad = math.radians(compass_angle)
    return (math.sin(rad), math.cos(rad))


def cast_ray(camera: CameraRecord, footprints, index,
             max_range: float = DEFAULT_MAX_RANGE_M) -> Assignment | None:
    """Assign a camera to the footprint its bearing hits first.

    Checks every boundary segment (exterior and holes) of candidate
    footprints within max_range; the nearest hit wins, distance ties going
    to the lexicographically lower building id. Returns None for no hit and
    raises InsideBuildingError for cameras strictly inside a footprint.
    """
    pos = camera.position
    direction = bearing_to_direction(camera.compass_angle)
    end = (pos[0] + direction[0] * max_range, pos[1] + direction[1] * max_range)
    minx, maxx = min(pos[0], end[0]), max(pos[0], end[0])
    miny, maxy = min(pos[1], end[1]), max(pos[1], end[1])
    candidates = index.query_box(minx - 1e-9, miny - 1e-9, maxx + 1e-9, maxy + 1e-9)

    for fi in index.query_box(pos[0] - 1e-9, pos[1] - 1e-9, pos[0] + 1e-9, pos[1] + 1e-9):
        fp = footprints[fi]
        if geometry.point_strictly_in_polygon(pos, fp.exterior, fp.holes):
            raise InsideBuildingError(
                f"camera {camera.image_id} lies inside footprint {fp.id}")

    best = None  # (distance, building_id, point)
    for fi in candidates:
        fp = footprints[fi]
        for ring in fp.boundary_rings():
            pts = geometry.open_ring(ring)
            for i in range(len(pts)):
                a, b = pts[i], pts[(i + 1) % len(pts)]
                t = geometry.ray_segment_intersection(pos, direction, a, b)
                if t is None or t <= 1e-9 or t > max_range:
                    continue
                hit = (pos[0] + direction[0] * t, pos[1] + direction[1] * t)
                if (best is None or t < best[0] - 1e-9
                        or (abs(t - best[0]) <= 1e-9 and fp.id < best[1])):
                    best = (t, fp.id, hit)
    if best is None:
        return None
    return Assignment(camera.image_id, best[1], best[2], best[0])


def align_cameras(cameras, footprints, index, max_range=DEFAULT_MAX_RANGE_M):
    """Cast every camera; returns (assignments, report).

    report counts parsed/assigned/misses/inside errors so that
    parsed == assigned + no_hit + inside.
    """
    assignments = []
    report = {"parsed": len(cameras), "assigned": 0, "no_hit": 0, "inside": 0,
              "errors": []}
    for cam in cameras:
        try:
            hit = cast_ray(cam, footprints, index, max_range)
        except InsideBuildingError as exc:
            report["inside"] += 1
            report["errors"].append({"image_id": cam.image_id, "reason": str(exc)})
            continue
        if hit is None:
            report["no_hit"] += 1
        else:
            report["assigned"] += 1
            assignments.append(hit)
    return assignments, report


def write_assignments_csv(assignments, path):
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "building_id", "hit_distance_m"])
        for a in assignments:
            writer.writerow([a.image_id, a.building_id, repr(a.hit_distance)])
