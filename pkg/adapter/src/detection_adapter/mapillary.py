"""Mapillary Graph API v4 client for image metadata.

Fetches the metadata fields the alignment stage consumes (computed camera
pose, compass angle, camera intrinsics, capture time) either per image id
or for a bounding box, following pagination and retrying transient
failures with exponential backoff. Records are emitted as JSON lines with
the fields exactly as served.
"""

from __future__ import annotations

import json
import logging
import time

import requests

from . import AuthError, ParamError, TransientError

log = logging.getLogger(__name__)

API_BASE = "https://graph.mapillary.com"

METADATA_FIELDS = (
    "computed_geometry", "computed_compass_angle", "computed_altitude",
    "computed_rotation", "camera_type", "captured_at", "camera_parameters",
    "exif_orientation",
)
REQUIRED_FIELDS = ("computed_geometry", "computed_compass_angle")


class MapillaryClient:
    def __init__(self, token: str, base_url: str = API_BASE,
                 max_retries: int = 3, backoff_s: float = 1.0, timeout_s: float = 30.0):
        if not token:
            raise AuthError("no API token (set MAPILLARY_TOKEN or pass --token)")
        self.token = token
        self.base_url = base_url.rstrip("/")
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self.session = requests.Session()

    def _get(self, url: str, params: dict | None = None) -> dict:
        headers = {"Authorization": f"OAuth {self.token}"}
        last = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self.session.get(url, params=params, headers=headers,
                                        timeout=self.timeout_s)
            except requests.RequestException as exc:
                last = f"request failed: {exc}"
                resp = None
            if resp is not None:
                if resp.status_code in (401, 403):
                    raise AuthError(f"API rejected the token (HTTP {resp.status_code})")
                if 400 <= resp.status_code < 500 and resp.status_code != 429:
                    raise ParamError(f"HTTP {resp.status_code} for {url}: {resp.text[:200]}")
                if resp.status_code == 200:
                    try:
                        return resp.json()
                    except ValueError as exc:
                        raise TransientError(f"non-JSON response from {url}") from exc
                last = f"HTTP {resp.status_code}"
            if attempt < self.max_retries:
                delay = self.backoff_s * (2 ** attempt)
                log.warning("retrying %s in %.2fs (%s)", url, delay, last)
                time.sleep(delay)
        raise TransientError(f"{url} still failing after {self.max_retries} retries ({last})")

    def fetch_image(self, image_id: str) -> dict:
        fields = ",".join(("id",) + METADATA_FIELDS)
        record = self._get(f"{self.base_url}/{image_id}", {"fields": fields})
        return _normalized(record)

    def fetch_bbox(self, bbox, limit: int = 2000):
        """All image records in a (west, south, east, north) box; follows
        paging.next links."""
        fields = ",".join(("id",) + METADATA_FIELDS)
        params = {"fields": fields, "bbox": ",".join(str(v) for v in bbox),
                  "limit": str(limit)}
        url = f"{self.base_url}/images"
        out = []
        while url:
            page = self._get(url, params)
            params = None  # the next link already carries the query
            for record in page.get("data", []):
                out.append(_normalized(record))
            url = (page.get("paging") or {}).get("next")
        return out


def _normalized(record: dict) -> dict:
    """Fields as served, except compass angles folded into [0, 360)."""
    angle = record.get("computed_compass_angle")
    if isinstance(angle, (int, float)) and not (0 <= angle < 360):
        log.warning("image %s: compass angle %s normalized", record.get("id"), angle)
        record = dict(record)
        record["computed_compass_angle"] = angle % 360.0
    return record


def validate_record(record: dict) -> list:
    problems = []
    if record.get("id") is None:
        problems.append("missing id")
    for field in REQUIRED_FIELDS:
        if record.get(field) is None:
            problems.append(f"missing {field}")
    angle = record.get("computed_compass_angle")
    if isinstance(angle, (int, float)) and not (0 <= angle < 360):
        problems.append(f"compass angle {angle} outside [0, 360)")
    return problems


def fetch_metadata(client: MapillaryClient, image_ids=None, bbox=None) -> list:
    """Records for explicit image ids and/or a bounding box, in request order."""
    if not image_ids and not bbox:
        raise ParamError("nothing to fetch: give image ids or a bbox")
    records = []
    for image_id in image_ids or ():
        records.append(client.fetch_image(image_id))
    if bbox:
        records.extend(client.fetch_bbox(bbox))
    return records


def write_records_jsonl(records, path):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
