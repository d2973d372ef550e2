"""detection-adapter CLI: fetch / detect / passthrough.

Exit codes: 0 ok, 2 auth/parameter/schema/setup error, 3 transient
upstream error, 4 internal.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import (AdapterError, AuthError, ParamError, SchemaError, SetupError,
               TransientError)
from .detect import (CallableBackend, FixtureBackend, WeightsBackend,
                     detect_images, load_class_map)
from .mapillary import (API_BASE, MapillaryClient, fetch_metadata,
                        validate_record, write_records_jsonl)
from .schema import passthrough, write_jsonl


def cmd_fetch(args):
    token = args.token or os.environ.get("MAPILLARY_TOKEN", "")
    client = MapillaryClient(token, base_url=args.base_url,
                             max_retries=args.max_retries,
                             backoff_s=args.backoff_s)
    image_ids = args.ids.split(",") if args.ids else None
    bbox = [float(v) for v in args.bbox.split(",")] if args.bbox else None
    records = fetch_metadata(client, image_ids, bbox)
    bad = [(r.get("id"), problems) for r in records
           if (problems := validate_record(r))]
    write_records_jsonl(records, args.out)
    print(f"fetch: {len(records)} records -> {args.out}"
          + (f" ({len(bad)} with missing fields)" if bad else ""))
    return 0


def cmd_detect(args):
    if args.fixture:
        backend = FixtureBackend(args.fixture)
    elif args.backend:
        backend = CallableBackend(args.backend)
    else:
        backend = WeightsBackend(args.weights or "facade-detector.weights")
    class_map = load_class_map(args.class_map) if args.class_map else None
    images = list(args.images)
    if args.image_list:
        with open(args.image_list) as fh:
            images += [line.strip() for line in fh if line.strip()]
    if not images:
        raise ParamError("no images given (positional arguments or --image-list)")
    records = detect_images(images, backend, class_map)
    write_jsonl(records, args.out)
    n_det = sum(len(r["detections"]) for r in records)
    print(f"detect: {len(records)} images, {n_det} detections -> {args.out}")
    return 0


def cmd_passthrough(args):
    n = passthrough(args.infile, args.out)
    print(f"passthrough: {n} records -> {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="detection-adapter")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fetch", help="download image metadata from the Mapillary API")
    s.add_argument("--ids", help="comma-separated image ids")
    s.add_argument("--bbox", help="west,south,east,north")
    s.add_argument("--out", required=True)
    s.add_argument("--token", default=None, help="defaults to $MAPILLARY_TOKEN")
    s.add_argument("--base-url", dest="base_url", default=API_BASE)
    s.add_argument("--max-retries", dest="max_retries", type=int, default=3)
    s.add_argument("--backoff-s", dest="backoff_s", type=float, default=1.0)
    s.set_defaults(func=cmd_fetch)

    s = sub.add_parser("detect", help="run (or replay) facade object detection")
    s.add_argument("images", nargs="*")
    s.add_argument("--image-list", dest="image_list")
    s.add_argument("--out", required=True)
    s.add_argument("--fixture", help="JSON file of precomputed raw detections")
    s.add_argument("--backend", help="inference callable as module:function")
    s.add_argument("--weights", help="detector weights path")
    s.add_argument("--class-map", dest="class_map",
                   help="JSON mapping of detector labels to window/door/balcony")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("passthrough",
                       help="validate and canonically re-emit a detection file")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_passthrough)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AuthError, ParamError, SchemaError, SetupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TransientError as exc:
        print(f"transient error: {exc}", file=sys.stderr)
        return 3
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
