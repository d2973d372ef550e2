"""Floor counting from facade object detections.

Window and door detections are grouped into horizontal rows by clustering
the gaps between consecutive vertical centres (exact 1-D 2-means), the row
count becomes a floor count, and per-function floor heights turn floors
into height pseudo-labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError, NoDetectionsError
from .geodata import BuildingFunction

DETECTION_CLASSES = ("window", "door", "balcony")
DEFAULT_MIN_CONFIDENCE = 0.5

# metres per storey
FLOOR_HEIGHTS = {
    BuildingFunction.RESIDENTIAL: 2.5,
    BuildingFunction.COMMERCIAL_PUBLIC: 3.5,
    BuildingFunction.UNKNOWN: 2.5,  # conservative default
}

# one cluster is indistinguishable when the gap spread is this flat
DEGENERATE_GAP_RATIO = 1.5


@dataclass(frozen=True)
class Detection:
    cls: str
    bbox: tuple   # (xmin, ymin, xmax, ymax), y growing downward
    confidence: float

    @property
    def y_center(self) -> float:
        return (self.bbox[1] + self.bbox[3]) / 2.0

    @property
    def height(self) -> float:
        return self.bbox[3] - self.bbox[1]


@dataclass(frozen=True)
class DetectionSet:
    image_id: str
    image_width_px: int
    image_height_px: int
    detections: tuple

    @classmethod
    def from_dict(cls, raw: dict) -> "DetectionSet":
        try:
            dets = []
            for d in raw["detections"]:
                if d["class"] not in DETECTION_CLASSES:
                    raise InputError(f"unknown detection class: {d['class']}")
                bbox = tuple(float(v) for v in d["bbox"])
                if len(bbox) != 4 or not (bbox[0] < bbox[2] and bbox[1] < bbox[3]):
                    raise InputError(f"malformed bbox: {d['bbox']}")
                dets.append(Detection(d["class"], bbox, float(d["confidence"])))
            obj = cls(str(raw["image_id"]), int(raw["image_width_px"]),
                      int(raw["image_height_px"]), tuple(dets))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed detection record: {exc}") from exc
        for d in obj.detections:
            if not (0 <= d.bbox[0] < d.bbox[2] <= obj.image_width_px
                    and 0 <= d.bbox[1] < d.bbox[3] <= obj.image_height_px):
                raise InputError(
                    f"{obj.image_id}: bbox {d.bbox} outside image bounds")
        return obj


def read_detections_jsonl(path) -> dict:
    """{image_id: DetectionSet} from a JSON-lines detection file."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read detections file {path}: {exc}") from exc
    for line in lines:
        if not line.strip():
            continue
        ds = DetectionSet.from_dict(json.loads(line))
        out[ds.image_id] = ds
    return out


@dataclass
class RowClustering:
    rows: list            # top to bottom; lists of indices into `retained`
    retained: list        # Detection objects that entered the clustering
    gap_values: list      # consecutive vertical gaps, px
    gap_partition: list   # True where the gap separates rows


@dataclass(frozen=True)
class FloorEstimate:
    building_id: str
    floors: int
    window_rows: int
    door_adjusted: bool


@dataclass(frozen=True)
class PseudoLabel:
    building_id: str
    height: float
    source: str
    floors: int
    function_used: BuildingFunction


def two_means_split(values):
    """Exact 1-D 2-means on values.

    Enumerates every contiguous split of the sorted values and returns
    (threshold, wcss): elements >= threshold form the larger-mean cluster.
    Equal values always land in the same cluster, matching what any
    centroid-distance assignment would do. Returns threshold None when a
    split never helps (fewer than 2 values).
    """
    vals = sorted(float(v) for v in values)
    n = len(vals)
    if n < 2:
        return None, 0.0
    prefix = [0.0]
    prefix_sq = [0.0]
    for v in vals:
        prefix.append(prefix[-1] + v)
        prefix_sq.append(prefix_sq[-1] + v * v)

    def sse(i, j):  # sum of squared deviations of vals[i:j]
        k = j - i
        s = prefix[j] - prefix[i]
        sq = prefix_sq[j] - prefix_sq[i]
        return sq - s * s / k

    best = (math.inf, None)
    for s in range(1, n):
        w = sse(0, s) + sse(s, n)
        if w < best[0] - 1e-15:
            best = (w, s)
    split = best[1]
    return vals[split], best[0]


def cluster_rows(dset: DetectionSet,
                 min_confidence: float = DEFAULT_MIN_CONFIDENCE) -> RowClustering:
    """Group window/door detections into horizontal rows.

    Detections are sorted by vertical centre; the gaps between consecutive
    centres are 2-means clustered (exact) and gaps in the larger-mean cluster
    separate rows. Near-uniform gap sets fall back to a threshold at the
    median window height. Balconies never enter the row math.
    """
    retained = [d for d in dset.detections
                if d.cls in ("window", "door") and d.confidence >= min_confidence]
    if not retained:
        raise NoDetectionsError(
            f"{dset.image_id}: no window/door detections at confidence "
            f">= {min_confidence}")
    retained.sort(key=lambda d: (d.y_center, d.bbox[0]))
    gaps = [retained[i + 1].y_center - retained[i].y_center
            for i in range(len(retained) - 1)]
    if not gaps:
        return RowClustering([[0]], retained, [], [])

    max_gap = max(gaps)
    min_gap = min(gaps)
    if len(retained) <= 2 or max_gap < DEGENERATE_GAP_RATIO * max(min_gap, 1e-12):
        window_heights = sorted(d.height for d in retained if d.cls == "window")
        if not window_heights:
            window_heights = sorted(d.height for d in retained)
        mid = len(window_heights) // 2
        if len(window_heights) % 2:
            threshold = window_heights[mid]
        else:
            threshold = (window_heights[mid - 1] + window_heights[mid]) / 2.0
        partition = [gap > threshold for gap in gaps]
    else:
        threshold, _wcss = two_means_split(gaps)
        partition = [gap >= threshold for gap in gaps]

    rows = [[0]]
    for i, separating in enumerate(partition):
        if separating:
            rows.append([i + 1])
        else:
            rows[-1].append(i + 1)
    return RowClustering(rows, retained, gaps, partition)


def estimate_floors(clustering: RowClustering, building_id: str) -> FloorEstimate:
    """Turn a row clustering into a floor count.

    Floors = number of rows containing a window, plus one when a door sits
    outside every window row band (a ground floor with no windows of its
    own). A facade with only doors counts as a single floor.
    """
    window_rows = 0
    bands = []
    for row in clustering.rows:
        windows = [clustering.retained[i] for i in row
                   if clustering.retained[i].cls == "window"]
        if windows:
            window_rows += 1
            bands.append((min(w.bbox[1] for w in windows),
                          max(w.bbox[3] for w in windows)))
    doors = [d for d in clustering.retained if d.cls == "door"]
    if window_rows == 0:
        return FloorEstimate(building_id, 1, 0, False)
    door_adjusted = False
    for door in doors:
        overlaps = any(door.bbox[1] <= hi and door.bbox[3] >= lo for lo, hi in bands)
        if not overlaps:
            door_adjusted = True
            break
    floors = window_rows + (1 if door_adjusted else 0)
    return FloorEstimate(building_id, floors, window_rows, door_adjusted)


def floors_to_height(floors: int, function: BuildingFunction) -> float:
    """floors x per-function storey height (2.5 m residential and unknown,
    3.5 m commercial/public)."""
    if floors < 1:
        raise InputError(f"floor count must be >= 1, got {floors}")
    return floors * FLOOR_HEIGHTS[BuildingFunction(function)]


def _lower_median(values):
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def make_pseudo_labels(assignments, detections_by_image: dict,
                       footprints_by_id: dict,
                       min_confidence: float = DEFAULT_MIN_CONFIDENCE):
    """One height pseudo-label per assigned building.

    Buildings seen by several images take the lower median of the per-image
    heights. Images without detections (or with nothing above the confidence
    cut) are skipped and reported. Returns (labels, report).
    """
    report = {"skipped": [], "images_used": 0}
    per_building: dict[str, list] = {}
    for a in assignments:
        dset = detections_by_image.get(a.image_id)
        if dset is None:
            report["skipped"].append({"image_id": a.image_id,
                                      "reason": "no detection set"})
            continue
        fp = footprints_by_id.get(a.building_id)
        if fp is None:
            report["skipped"].append({"image_id": a.image_id,
                                      "reason": f"unknown building {a.building_id}"})
            continue
        try:
            clustering = cluster_rows(dset, min_confidence)
        except NoDetectionsError as exc:
            report["skipped"].append({"image_id": a.image_id, "reason": str(exc)})
            continue
        estimate = estimate_floors(clustering, a.building_id)
        height = floors_to_height(estimate.floors, fp.function)
        per_building.setdefault(a.building_id, []).append((height, estimate.floors))
        report["images_used"] += 1

    labels = []
    for bid in sorted(per_building):
        entries = per_building[bid]
        height = _lower_median([h for h, _f in entries])
        floors = _lower_median([f for _h, f in entries])
        labels.append(PseudoLabel(bid, height, "SVI", floors,
                                  footprints_by_id[bid].function))
    return labels, report


def write_pseudo_labels_csv(labels, counts_by_building, path):
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["building_id", "floors", "height_m", "n_images"])
        for lab in labels:
            writer.writerow([lab.building_id, lab.floors, repr(lab.height),
                             counts_by_building.get(lab.building_id, 1)])
