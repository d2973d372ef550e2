"""Canonical detection-interchange schema.

One JSON object per line:
  {"image_id": str, "image_width_px": int, "image_height_px": int,
   "detections": [{"class": "window|door|balcony",
                   "bbox": [xmin, ymin, xmax, ymax], "confidence": float}]}

bbox is in pixels, y growing downward, and must lie inside the image.
Canonical serialization (sorted keys, fixed separators) makes passthrough
a byte-stable fixpoint.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import ParamError, SchemaError

CLASSES = ("window", "door", "balcony")


def validate_detection_set(obj) -> list:
    """Return a list of problems; empty means the record is valid."""
    problems = []
    if not isinstance(obj, dict):
        return ["record is not a JSON object"]
    for key, kind in (("image_id", str), ("image_width_px", int),
                      ("image_height_px", int), ("detections", list)):
        if key not in obj:
            problems.append(f"missing {key}")
        elif not isinstance(obj[key], kind) or isinstance(obj[key], bool):
            problems.append(f"{key} has wrong type")
    if problems:
        return problems
    w, h = obj["image_width_px"], obj["image_height_px"]
    if w <= 0 or h <= 0:
        problems.append("non-positive image dimensions")
    for i, det in enumerate(obj["detections"]):
        where = f"detections[{i}]"
        if not isinstance(det, dict):
            problems.append(f"{where} is not an object")
            continue
        cls = det.get("class")
        if cls not in CLASSES:
            problems.append(f"{where}: unknown class {cls!r}")
        bbox = det.get("bbox")
        if (not isinstance(bbox, list) or len(bbox) != 4
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           for v in bbox)):
            problems.append(f"{where}: malformed bbox")
            continue
        x0, y0, x1, y1 = bbox
        if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
            problems.append(f"{where}: bbox {bbox} outside image bounds")
        conf = det.get("confidence")
        if (not isinstance(conf, (int, float)) or isinstance(conf, bool)
                or not (0.0 <= conf <= 1.0)):
            problems.append(f"{where}: confidence outside [0, 1]")
    return problems


def canonicalize(obj) -> dict:
    """Normalized field order and value types for stable serialization."""
    return {
        "image_id": str(obj["image_id"]),
        "image_width_px": int(obj["image_width_px"]),
        "image_height_px": int(obj["image_height_px"]),
        "detections": [
            {"class": d["class"],
             "bbox": [float(v) for v in d["bbox"]],
             "confidence": float(d["confidence"])}
            for d in obj["detections"]
        ],
    }


def dumps_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_jsonl(records, path):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(dumps_line(rec) + "\n")


def passthrough(in_path, out_path) -> int:
    """Validate a detection file and re-emit it canonically.

    Raises SchemaError naming the first offending line. Running the output
    through again produces identical bytes.
    """
    try:
        lines = Path(in_path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParamError(f"cannot read {in_path}: {exc}") from exc
    records = []
    for ln, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError as exc:
            raise SchemaError(f"{in_path}:{ln}: invalid JSON: {exc}") from exc
        problems = validate_detection_set(obj)
        if problems:
            raise SchemaError(f"{in_path}:{ln}: " + "; ".join(problems))
        records.append(canonicalize(obj))
    write_jsonl(records, out_path)
    return len(records)
