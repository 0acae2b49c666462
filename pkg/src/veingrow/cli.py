"""Command-line entry point.

Exit codes: 0 success, 1 a check failed, 2 empty or invalid corpus,
3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .codec import DEFAULT_DEPTH, PolarConfig, cover_ratios, decode, encode
from .exceptions import EmptyCorpus, ParseError, VeinGrowError
from .geometry import Polygon, RasterGrid, mask_iou, rasterize
from .ingest import CorpusFilter, apply_filter, parse_coco, synthetic_corpus
from .losses import LOSS_NAMES, gradient_check, invariance_check
from .targets import centroidness_map, fcos_centerness_map, polarmask_centerness_map

EXIT_OK, EXIT_CHECK, EXIT_CORPUS, EXIT_IO = 0, 1, 2, 3
DEFAULT_COMPLEXITIES = (4, 8, 12, 20, 24)

log = logging.getLogger("veingrow")


def _complexities(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"complexities must be comma-separated integers, got {text!r}") from None
    if not values or min(values) < 3:
        raise argparse.ArgumentTypeError("every complexity must be >= 3")
    return values


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _supersample(text: str) -> int:
    k = int(text)
    if k not in (1, 2, 4, 8):
        raise argparse.ArgumentTypeError("supersample must be 1, 2, 4 or 8")
    return k


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", type=Path, help="COCO-format annotation JSON")
    common.add_argument("--synthetic", type=int, metavar="N", help="use N generated blobs instead of --input")
    common.add_argument("--out", type=Path, default=Path("veingrow_out"), help="output directory")
    common.add_argument("--complexities", type=_complexities, default=list(DEFAULT_COMPLEXITIES))
    common.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="node search depth")
    common.add_argument("--supersample", type=_supersample, default=4)
    common.add_argument("--no-minor", action="store_true", help="major veins only")
    common.add_argument("--min-area", type=float, default=0.0)
    common.add_argument("--max-instances", type=int)
    common.add_argument("--categories", type=_int_list, help="comma-separated category ids")
    common.add_argument("--keep-multipart", action="store_true", help="use the first ring of multi-ring instances")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)

    parser = argparse.ArgumentParser(prog="veingrow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"veingrow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("cover-ratio", parents=[common], help="mask cover ratio per complexity")
    sub.add_parser("encode", parents=[common], help="write vein trees as JSON lines")
    tg = sub.add_parser("targets", parents=[common], help="write centroidness and centerness maps")
    tg.add_argument("--rays", type=int, default=36, help="directions for the ray-ratio centerness")
    lc = sub.add_parser("loss-check", parents=[common], help="gradient and invariance checks of the losses")
    lc.add_argument("--trials", type=int, default=100)
    lc.add_argument("--corrupt-gradient", choices=LOSS_NAMES, help=argparse.SUPPRESS)
    return parser


def _filter(args) -> CorpusFilter:
    return CorpusFilter(
        min_area=args.min_area,
        categories=None if args.categories is None else frozenset(args.categories),
        max_instances=args.max_instances,
        skip_multipart=not args.keep_multipart,
    )


def _load(args):
    filt = _filter(args)
    if args.synthetic is not None:
        records = synthetic_corpus(args.synthetic, args.seed)
        source = f"synthetic:{args.synthetic}:seed={args.seed}"
    elif args.input is not None:
        records = parse_coco(args.input)
        source = str(args.input)
    else:
        raise EmptyCorpus("either --input or --synthetic is required")
    records = sorted(apply_filter(records, filt), key=lambda r: r.instance_id)
    if not records:
        raise EmptyCorpus("no instances left after filtering")
    return records, filt, source


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(x) for x in items]


def _meta(args, filt, source, **extra) -> dict:
    meta = {
        "tool": "veingrow",
        "version": __version__,
        "command": args.command,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "input": source,
        "filter": filt.as_dict() if filt is not None else None,
        "complexities": args.complexities,
        "depth": args.depth,
        "supersample": args.supersample,
        "use_minor": not args.no_minor,
        "seed": args.seed,
    }
    meta.update(extra)
    return meta


def _write_json(path: Path, data):
    path.write_text(json.dumps(data, indent=2) + "\n")


# -- cover-ratio ----------------------------------------------------------

def _cover_job(job):
    instance_id, vertices, complexities, depth, supersample, use_minor = job
    try:
        poly = Polygon(vertices)
        if use_minor:
            return instance_id, cover_ratios(poly, complexities, depth, supersample), None
        g = RasterGrid.around(poly, supersample)
        src = rasterize(poly, g)
        out = {}
        for n in complexities:
            tree = encode(poly, PolarConfig(n), depth, g, refine=False)
            out[n] = (mask_iou(src, rasterize(decode(tree, False), g)), None)
        return instance_id, out, None
    except VeinGrowError as exc:
        return instance_id, None, f"{type(exc).__name__}: {exc}"


def cmd_cover_ratio(args) -> int:
    records, filt, source = _load(args)
    jobs = [
        (r.instance_id, r.polygon.vertices, args.complexities, args.depth, args.supersample, not args.no_minor)
        for r in records
    ]
    t0 = time.perf_counter()
    results = _map(_cover_job, jobs, args.workers)
    elapsed = time.perf_counter() - t0
    failures = {iid: err for iid, _, err in results if err}
    ok = [res for _, res, err in results if not err]
    if not ok:
        raise EmptyCorpus("every instance failed to encode")
    methods = ["major_only"] if args.no_minor else ["major_only", "veinmask"]
    rows = []
    for n in args.complexities:
        for m, method in enumerate(methods):
            vals = np.array([res[n][m] for res in ok])
            rows.append(
                [n, method, f"{vals.mean():.6f}", f"{np.median(vals):.6f}", f"{np.percentile(vals, 10):.6f}", len(vals)]
            )
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "cover_ratio.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["complexity", "method", "mean_iou", "median_iou", "p10_iou", "instance_count"])
        w.writerows(rows)
    _write_json(
        args.out / "cover_ratio_meta.json",
        _meta(
            args,
            filt,
            source,
            instances=len(records),
            failed=len(failures),
            failures={str(k): v for k, v in sorted(failures.items())},
            seconds=round(elapsed, 3),
            workers=args.workers,
        ),
    )
    for row in rows:
        log.info("n=%s %s mean=%s", row[0], row[1], row[2])
    return EXIT_OK


# -- encode ---------------------------------------------------------------

def _encode_job(job):
    instance_id, vertices, n, depth, supersample, use_minor = job
    try:
        poly = Polygon(vertices)
        tree = encode(poly, PolarConfig(n), depth, RasterGrid.around(poly, supersample), refine=use_minor)
        return instance_id, tree.to_json(instance_id), None
    except VeinGrowError as exc:
        return instance_id, None, f"{type(exc).__name__}: {exc}"


def cmd_encode(args) -> int:
    records, filt, source = _load(args)
    args.out.mkdir(parents=True, exist_ok=True)
    failures = {}
    for n in args.complexities:
        jobs = [
            (r.instance_id, r.polygon.vertices, n, args.depth, args.supersample, not args.no_minor) for r in records
        ]
        lines = []
        for iid, line, err in _map(_encode_job, jobs, args.workers):
            if err:
                failures.setdefault(str(iid), {})[str(n)] = err
                log.warning("instance %s at n=%d failed: %s", iid, n, err)
            else:
                lines.append(line)
        (args.out / f"veins_n{n}.jsonl").write_text("".join(line + "\n" for line in lines))
    _write_json(args.out / "encode_meta.json", _meta(args, filt, source, instances=len(records), failures=failures))
    return EXIT_OK


# -- targets --------------------------------------------------------------

def _targets_job(job):
    instance_id, vertices, rays = job
    try:
        poly = Polygon(vertices)
        g = RasterGrid.around(poly, 1)
        xmin, ymin, xmax, ymax = poly.bounds
        cm = centroidness_map(poly, g)
        maps = {
            "centroidness": cm,
            "fcos_centerness": fcos_centerness_map((xmin, ymin, xmax - xmin, ymax - ymin), g),
            "polarmask_centerness": polarmask_centerness_map(poly, PolarConfig(rays), g),
        }
        info = {"fallback": cm.fallback, "anchor": list(cm.anchor), "grid": [g.x0, g.y0, g.width, g.height]}
        return instance_id, maps, info, None
    except VeinGrowError as exc:
        return instance_id, None, None, f"{type(exc).__name__}: {exc}"


def cmd_targets(args) -> int:
    records, filt, source = _load(args)
    args.out.mkdir(parents=True, exist_ok=True)
    jobs = [(r.instance_id, r.polygon.vertices, args.rays) for r in records]
    instances, failures = {}, {}
    for iid, maps, info, err in _map(_targets_job, jobs, args.workers):
        if err:
            failures[str(iid)] = err
            continue
        for name, wm in maps.items():
            wm.to_pgm(args.out / f"{iid}_{name}.pgm")
            wm.to_csv(args.out / f"{iid}_{name}.csv")
        instances[str(iid)] = info
    _write_json(
        args.out / "targets_meta.json",
        _meta(args, filt, source, rays=args.rays, instances=instances, failures=failures),
    )
    return EXIT_OK


# -- loss-check -----------------------------------------------------------

def cmd_loss_check(args) -> int:
    rows = gradient_check(args.trials, args.seed, corrupt=args.corrupt_gradient)
    inv = invariance_check(args.trials, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "loss_check.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["loss_name", "trial", "max_rel_err", "pass"])
        for name, trial, err, passed in rows:
            w.writerow([name, trial, f"{err:.3e}", str(passed).lower()])
    failed = sum(not r[3] for r in rows) + sum(not ok for _, ok in inv)
    _write_json(
        args.out / "loss_check_meta.json",
        {
            "tool": "veingrow",
            "version": __version__,
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "seed": args.seed,
            "trials": args.trials,
            "invariants": dict(inv),
            "failed_checks": failed,
        },
    )
    return EXIT_CHECK if failed else EXIT_OK


COMMANDS = {
    "cover-ratio": cmd_cover_ratio,
    "encode": cmd_encode,
    "targets": cmd_targets,
    "loss-check": cmd_loss_check,
}


def main(argv=None) -> int:
    level = os.environ.get("VEINGROW_LOG", "warn").upper()
    logging.basicConfig(
        level={"WARN": logging.WARNING}.get(level, getattr(logging, level, logging.WARNING)),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (EmptyCorpus, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORPUS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
