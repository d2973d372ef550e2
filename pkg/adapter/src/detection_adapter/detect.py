"""Facade object detection wrapper.

The detector itself is pluggable: a fixture file of precomputed raw
detections (first-class, used by every test), a python callable
("module:function") wrapping a real model, or a weights file for a bundled
backend (not shipped; pointing at missing weights explains how to use
fixture mode instead).

Raw backend output contract, per image:
  {"width": int, "height": int,
   "detections": [{"label": str, "box": [x0, y0, x1, y1], "score": float}]}

Labels are mapped to the canonical classes through a configurable table;
unmapped labels are dropped, boxes are clamped to the image.
"""

from __future__ import annotations

import importlib
import json
from pathlib import Path

from . import ParamError, SetupError
from .schema import canonicalize, validate_detection_set

DEFAULT_CLASS_MAP = {
    "window": "window",
    "door": "door",
    "balcony": "balcony",
    # label variants seen in common facade datasets
    "win": "window",
    "windowpane": "window",
    "door_main": "door",
    "shop_door": "door",
    "balustrade": "balcony",
}


class FixtureBackend:
    """Precomputed raw detections keyed by image reference (path stem or id)."""

    def __init__(self, path):
        try:
            self.table = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ParamError(f"cannot read detection fixture {path}: {exc}") from exc

    def infer(self, image_ref: str) -> dict:
        key = Path(image_ref).stem
        if key in self.table:
            return self.table[key]
        if image_ref in self.table:
            return self.table[image_ref]
        raise ParamError(f"fixture has no detections for {image_ref}")


class CallableBackend:
    """Wraps an inference function given as 'package.module:function'."""

    def __init__(self, spec: str):
        try:
            module_name, func_name = spec.split(":")
            module = importlib.import_module(module_name)
            self.func = getattr(module, func_name)
        except (ValueError, ImportError, AttributeError) as exc:
            raise SetupError(f"cannot load detector backend {spec!r}: {exc}") from exc

    def infer(self, image_ref: str) -> dict:
        return self.func(image_ref)


class WeightsBackend:
    """Placeholder for a bundled single-stage detector runtime."""

    def __init__(self, weights_path):
        if not Path(weights_path).is_file():
            raise SetupError(
                f"detector weights not found at {weights_path}; either provide "
                "them, point --backend at an inference callable, or run with "
                "--fixture <raw-detections.json> / the passthrough command")
        raise SetupError(
            "no bundled detector runtime in this build; use --backend "
            "module:function to wrap your model, or --fixture for "
            "precomputed detections")

    def infer(self, image_ref: str) -> dict:  # pragma: no cover
        raise NotImplementedError


def _clamp(value, lo, hi):
    return min(max(value, lo), hi)


def adapt_raw_result(image_id: str, raw: dict, class_map=None) -> dict:
    """One canonical detection set from a raw backend result."""
    class_map = class_map or DEFAULT_CLASS_MAP
    try:
        width = int(raw["width"])
        height = int(raw["height"])
        raw_dets = raw["detections"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParamError(f"{image_id}: malformed raw detector output: {exc}") from exc
    detections = []
    for det in raw_dets:
        cls = class_map.get(str(det.get("label", "")).lower())
        if cls is None:
            continue
        try:
            x0, y0, x1, y1 = (float(v) for v in det["box"])
            score = float(det["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParamError(f"{image_id}: malformed detection: {exc}") from exc
        x0 = _clamp(x0, 0.0, width)
        x1 = _clamp(x1, 0.0, width)
        y0 = _clamp(y0, 0.0, height)
        y1 = _clamp(y1, 0.0, height)
        if x1 - x0 <= 0 or y1 - y0 <= 0:
            continue
        detections.append({"class": cls, "bbox": [x0, y0, x1, y1],
                           "confidence": _clamp(score, 0.0, 1.0)})
    out = canonicalize({"image_id": image_id, "image_width_px": width,
                        "image_height_px": height, "detections": detections})
    problems = validate_detection_set(out)
    if problems:
        raise ParamError(f"{image_id}: adapted output invalid: " + "; ".join(problems))
    return out


def detect_images(image_refs, backend, class_map=None):
    """Canonical detection sets for the given images, in input order."""
    out = []
    for ref in image_refs:
        raw = backend.infer(str(ref))
        out.append(adapt_raw_result(Path(str(ref)).stem, raw, class_map))
    return out


def load_class_map(path) -> dict:
    try:
        table = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ParamError(f"cannot read class map {path}: {exc}") from exc
    return {str(k).lower(): v for k, v in table.items()}
