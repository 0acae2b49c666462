"""Annotation loading and synthetic fixture shapes."""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .exceptions import DegenerateGeometry, EmptyCorpus, ParamError, ParseError
from .geometry import Polygon


@dataclass(frozen=True)
class AnnotationRecord:
    instance_id: int
    image_id: int
    category_id: int
    polygons: tuple[Polygon, ...]
    bbox: tuple[float, float, float, float]
    area: float

    @property
    def polygon(self) -> Polygon:
        """The first (outer) ring."""
        return self.polygons[0]


@dataclass(frozen=True)
class CorpusFilter:
    min_area: float = 0.0
    categories: frozenset[int] | None = None
    max_instances: int | None = None
    skip_multipart: bool = True

    def __post_init__(self):
        if self.min_area < 0:
            raise ValueError(f"min_area must be >= 0, got {self.min_area}")
        if self.max_instances is not None and self.max_instances < 0:
            raise ValueError(f"max_instances must be >= 0, got {self.max_instances}")

    def as_dict(self) -> dict:
        return {
            "min_area": self.min_area,
            "categories": None if self.categories is None else sorted(self.categories),
            "max_instances": self.max_instances,
            "skip_multipart": self.skip_multipart,
        }


def warn_skip(instance_id, reason: str):
    print(f"skip {instance_id}: {reason}", file=sys.stderr)


def _ring(flat) -> Polygon:
    if not isinstance(flat, (list, tuple)) or not all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in flat
    ):
        raise ValueError("polygon ring is not a flat list of numbers")
    if len(flat) % 2:
        raise ValueError(f"polygon ring has odd length {len(flat)}")
    if len(flat) < 6:
        raise ValueError(f"polygon ring has {len(flat)} numbers, need >= 6")
    return Polygon(np.asarray(flat, dtype=float).reshape(-1, 2))


def _record(ann: dict) -> AnnotationRecord:
    seg = ann.get("segmentation")
    if isinstance(seg, dict) or (isinstance(seg, list) and seg and isinstance(seg[0], dict)):
        raise ValueError("RLE segmentation")
    if not isinstance(seg, list) or not seg:
        raise ValueError("missing polygon segmentation")
    try:
        rings = tuple(_ring(r) for r in seg)
    except DegenerateGeometry as exc:
        raise ValueError(str(exc)) from None
    xs = np.concatenate([r.vertices[:, 0] for r in rings])
    ys = np.concatenate([r.vertices[:, 1] for r in rings])
    bbox = ann.get("bbox")
    if bbox is None or len(bbox) != 4:
        bbox = (xs.min(), ys.min(), xs.max() - xs.min(), ys.max() - ys.min())
    area = ann.get("area")
    if area is None:
        area = sum(r.area for r in rings)
    area = float(area)
    if not area > 0:
        raise ValueError(f"non-positive area {area}")
    return AnnotationRecord(
        instance_id=int(ann["id"]),
        image_id=int(ann.get("image_id", -1)),
        category_id=int(ann.get("category_id", -1)),
        polygons=rings,
        bbox=tuple(float(b) for b in bbox),
        area=area,
    )


def parse_coco(path, on_skip: Callable[[object, str], None] = warn_skip) -> list[AnnotationRecord]:
    """Read polygon instances from a COCO-style annotation file.

    Annotations that cannot be used (RLE masks, malformed or degenerate
    rings) are reported through ``on_skip(instance_id, reason)`` and left
    out.  Records keep the file order.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("annotations"), list):
        raise ParseError(f"{path} has no 'annotations' list")

    records = []
    for i, ann in enumerate(data["annotations"]):
        ann_id = ann.get("id", f"#{i}") if isinstance(ann, dict) else f"#{i}"
        try:
            if not isinstance(ann, dict) or "id" not in ann:
                raise ValueError("annotation without an id")
            records.append(_record(ann))
        except (ValueError, TypeError, KeyError) as exc:
            on_skip(ann_id, str(exc))
    if not records:
        raise EmptyCorpus(f"{path} contains no usable polygon annotations")
    return records


def apply_filter(records: Iterable[AnnotationRecord], f: CorpusFilter) -> list[AnnotationRecord]:
    out = []
    for rec in records:
        if f.max_instances is not None and len(out) >= f.max_instances:
            break
        if rec.area < f.min_area:
            continue
        if f.categories is not None and rec.category_id not in f.categories:
            continue
        if f.skip_multipart and len(rec.polygons) > 1:
            continue
        out.append(rec)
    return out


def _regular(radius: float, count: int, center, phase: float = 0.0) -> np.ndarray:
    t = phase + 2 * np.pi * np.arange(count) / count
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def _positive(value, name):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ParamError(f"{name} must be a positive number, got {value!r}")


def synthesize_shape(kind: str, seed: int = 0, **params) -> Polygon:
    """Deterministic fixture polygon.

    kinds and their parameters (defaults in brackets)::

        circle          radius [50], vertices [512], center
        square          side [100], origin [(1, 1)]
        star            points [5], outer [50], inner [20], center
        notched_square  side [100], notch_width [30], notch_depth [30], origin [(1, 1)]
        random_blob     radius [40], vertices [96], roughness [0.35], bend [0.0], center

    Shapes without an explicit center or origin sit 2 px inside the positive
    quadrant.  Only ``random_blob`` uses ``seed``.
    """
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise ParamError(f"unknown shape kind {kind!r}") from None
    try:
        return builder(np.random.default_rng(seed), **params)
    except TypeError as exc:
        raise ParamError(str(exc)) from None
    except DegenerateGeometry as exc:
        raise ParamError(f"{kind} parameters give an invalid polygon: {exc}") from None


def _circle(rng, radius=50.0, vertices=512, center=None):
    _positive(radius, "radius")
    if int(vertices) != vertices or vertices < 8:
        raise ParamError(f"circle needs an integer vertex count >= 8, got {vertices!r}")
    if center is None:
        center = (radius + 2, radius + 2)
    return Polygon(_regular(radius, int(vertices), center))


def _square(rng, side=100.0, origin=(1.0, 1.0)):
    _positive(side, "side")
    x, y = origin
    return Polygon([(x, y), (x + side, y), (x + side, y + side), (x, y + side)])


def _star(rng, points=5, outer=50.0, inner=20.0, center=None):
    _positive(outer, "outer")
    _positive(inner, "inner")
    if int(points) != points or points < 3:
        raise ParamError(f"star needs >= 3 points, got {points!r}")
    if inner >= outer:
        raise ParamError("star inner radius must be below the outer radius")
    if center is None:
        center = (outer + 2, outer + 2)
    t = np.pi * np.arange(2 * points) / points - np.pi / 2
    r = np.where(np.arange(2 * points) % 2 == 0, outer, inner)
    return Polygon(np.column_stack([center[0] + r * np.cos(t), center[1] + r * np.sin(t)]))


def _notched_square(rng, side=100.0, notch_width=30.0, notch_depth=30.0, origin=(1.0, 1.0)):
    for name, v in (("side", side), ("notch_width", notch_width), ("notch_depth", notch_depth)):
        _positive(v, name)
    if notch_width >= side or notch_depth >= side:
        raise ParamError("notch must be smaller than the square")
    x, y = origin
    a = x + (side - notch_width) / 2
    b = a + notch_width
    return Polygon(
        [
            (x, y),
            (a, y),
            (a, y + notch_depth),
            (b, y + notch_depth),
            (b, y),
            (x + side, y),
            (x + side, y + side),
            (x, y + side),
        ]
    )


def _random_blob(rng, radius=40.0, vertices=96, roughness=0.35, bend=0.0, center=None):
    _positive(radius, "radius")
    if int(vertices) != vertices or vertices < 8:
        raise ParamError(f"random_blob needs >= 8 vertices, got {vertices!r}")
    if roughness < 0 or bend < 0:
        raise ParamError("roughness and bend must be >= 0")
    t = 2 * np.pi * np.arange(int(vertices)) / vertices
    harmonics = np.arange(2, 8)
    amp = roughness * rng.normal(size=len(harmonics)) / harmonics
    phase = rng.uniform(0, 2 * np.pi, size=len(harmonics))
    r = 1.0 + (amp[:, None] * np.cos(harmonics[:, None] * t + phase[:, None])).sum(axis=0)
    r = radius * np.maximum(r, 0.15)
    v = np.column_stack([r * np.cos(t), r * np.sin(t)])
    # a sinusoidal shear turns the star-shaped outline into a bent one
    freq = rng.uniform(0.5, 1.5) * np.pi / radius
    while True:
        bent = v.copy()
        bent[:, 0] += bend * radius * np.sin(freq * v[:, 1])
        try:
            poly = Polygon(bent)
            break
        except DegenerateGeometry:
            if bend < 1e-3:
                raise
            bend /= 2
    v = poly.vertices
    if center is None:
        shift = 2 - v.min(axis=0)
    else:
        shift = np.asarray(center, dtype=float) - v.mean(axis=0)
    return Polygon(v + shift)


_BUILDERS = {
    "circle": _circle,
    "square": _square,
    "star": _star,
    "notched_square": _notched_square,
    "random_blob": _random_blob,
}

SHAPE_KINDS = tuple(_BUILDERS)


def synthetic_corpus(count: int, seed: int = 0, bend: float = 0.3) -> list[AnnotationRecord]:
    """Records of bent random blobs; a stand-in when no annotation file is at hand."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(count):
        poly = synthesize_shape(
            "random_blob",
            seed=int(rng.integers(2**31)),
            radius=float(rng.uniform(15, 60)),
            roughness=float(rng.uniform(0.1, 0.6)),
            bend=bend,
        )
        xmin, ymin, xmax, ymax = poly.bounds
        records.append(
            AnnotationRecord(i + 1, 0, 1, (poly,), (xmin, ymin, xmax - xmin, ymax - ymin), poly.area)
        )
    return records


def records_to_coco(records: Iterable[AnnotationRecord]) -> dict:
    """Inverse of :func:`parse_coco` for writing fixture corpora."""
    anns = []
    for rec in records:
        anns.append(
            {
                "id": rec.instance_id,
                "image_id": rec.image_id,
                "category_id": rec.category_id,
                "segmentation": [r.vertices.ravel().tolist() for r in rec.polygons],
                "bbox": list(rec.bbox),
                "area": rec.area,
                "iscrowd": 0,
            }
        )
    return {"images": [], "categories": [], "annotations": anns}
