"""Vein encoding of a polygon mask and its reconstruction.

A polygon is described from a root point by ``n`` major veins (ray lengths
along fixed polar directions).  Every pair of adjacent major veins bounds a
*part*; for each part a node is walked toward the boundary, and when the part
bulges past the chord joining the two major endpoints (the angle at the node
exceeds a half turn) minor veins are grown from the node along the same
global directions.  All ray lengths come from exact ray casts against the
source polygon, so the reconstruction is an upper bound of what a perfect
regressor could achieve.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import (
    DegenerateGeometry,
    InternalGeometryError,
    NodeSearchEscaped,
    OriginOutsideMask,
)
from .geometry import (
    Point2,
    Polygon,
    RasterGrid,
    as_point,
    as_polygon,
    contains_points,
    interior_anchor,
    mask_iou,
    polygon_centroid,
    raster_iou,
    rasterize,
    ray_distances,
)

TWO_PI = 2.0 * math.pi
DEFAULT_DEPTH = 3


@dataclass(frozen=True)
class PolarConfig:
    """Shared polar frame: ``n`` directions at ``angle_offset + 2*pi*k/n``."""

    n: int
    angle_offset: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"direction count must be an integer >= 3, got {self.n!r}")

    @property
    def angles(self) -> np.ndarray:
        return self.angle_offset + TWO_PI * np.arange(self.n) / self.n

    @property
    def directions(self) -> np.ndarray:
        a = self.angles
        return np.column_stack([np.cos(a), np.sin(a)])


class OffsetOracle:
    """Ground-truth stand-in for predicted offset maps.

    Calling the oracle at an interior point returns the ``n`` ray-cast
    distances to the polygon boundary.
    """

    def __init__(self, polygon: Polygon, config: PolarConfig):
        self.polygon = as_polygon(polygon)
        self.config = config
        self._dirs = config.directions

    def _check(self, q: Point2):
        if not contains_points(self.polygon, [q], strict=True)[0]:
            raise OriginOutsideMask(f"query point {tuple(q)} is not strictly inside the mask")

    def __call__(self, q) -> np.ndarray:
        q = as_point(q)
        self._check(q)
        d = ray_distances(self.polygon, np.repeat([q], self.config.n, axis=0), self._dirs)
        if not np.all(d > 0):
            raise InternalGeometryError(f"ray cast from {tuple(q)} missed the boundary")
        return d

    def distance(self, q, k: int) -> float:
        """Distance along direction ``k`` only."""
        q = as_point(q)
        self._check(q)
        d = ray_distances(self.polygon, [q], self._dirs[k % self.config.n][None])[0]
        if not d > 0:
            raise InternalGeometryError(f"ray cast from {tuple(q)} along {k} missed the boundary")
        return float(d)


def build_offset_oracle(p: Polygon, cfg: PolarConfig) -> OffsetOracle:
    return OffsetOracle(p, cfg)


@dataclass(frozen=True)
class MajorVeinSet:
    root: Point2
    distances: np.ndarray
    endpoints: np.ndarray


@dataclass(frozen=True)
class PartRefinement:
    """Refinement record for the part between major veins ``k`` and ``k+1``.

    ``node`` is None when no node was found (search escaped the mask or the
    tree was encoded without refinement).
    """

    part_index: int
    node: Point2 | None
    is_twisty: bool
    minor_directions: tuple[int, ...] = ()
    minor_endpoints: tuple[Point2, ...] = ()


@dataclass(frozen=True)
class VeinTree:
    config: PolarConfig
    majors: MajorVeinSet
    parts: tuple[PartRefinement, ...]
    depth: int = DEFAULT_DEPTH
    anchor_fallback: bool = field(default=False, compare=False)

    @property
    def n_twisty(self) -> int:
        return sum(part.is_twisty for part in self.parts)

    def to_dict(self, instance_id=None) -> dict:
        parts = []
        for part in self.parts:
            parts.append(
                {
                    "index": part.part_index,
                    "node": None if part.node is None else [part.node.x, part.node.y],
                    "twisty": part.is_twisty,
                    "minor": [
                        {"dir": int(j), "endpoint": [e.x, e.y]}
                        for j, e in zip(part.minor_directions, part.minor_endpoints)
                    ],
                }
            )
        return {
            "instance_id": instance_id,
            "n": self.config.n,
            "s": self.depth,
            "root": [self.majors.root.x, self.majors.root.y],
            "major_distances": [float(d) for d in self.majors.distances],
            "parts": parts,
        }

    def to_json(self, instance_id=None) -> str:
        return json.dumps(self.to_dict(instance_id))

    @classmethod
    def from_dict(cls, data: dict, angle_offset: float = 0.0) -> "VeinTree":
        cfg = PolarConfig(int(data["n"]), angle_offset)
        root = as_point(data["root"])
        dist = np.asarray(data["major_distances"], dtype=float)
        if len(dist) != cfg.n:
            raise ValueError(f"expected {cfg.n} major distances, got {len(dist)}")
        majors = _majors(root, dist, cfg)
        parts = tuple(
            PartRefinement(
                part_index=int(rec["index"]),
                node=None if rec["node"] is None else as_point(rec["node"]),
                is_twisty=bool(rec["twisty"]),
                minor_directions=tuple(int(m["dir"]) for m in rec["minor"]),
                minor_endpoints=tuple(as_point(m["endpoint"]) for m in rec["minor"]),
            )
            for rec in data["parts"]
        )
        return cls(cfg, majors, parts, int(data["s"]))


def _majors(root: Point2, distances: np.ndarray, cfg: PolarConfig) -> MajorVeinSet:
    distances = np.array(distances, dtype=float)
    endpoints = np.asarray(root) + distances[:, None] * cfg.directions
    distances.setflags(write=False)
    endpoints.setflags(write=False)
    return MajorVeinSet(root, distances, endpoints)


def grow_major_veins(oracle: OffsetOracle, root, cfg: PolarConfig) -> MajorVeinSet:
    root = as_point(root)
    return _majors(root, oracle(root), cfg)


def _step_fractions(i: int, s: int) -> tuple[float, float]:
    if i == s - 1:
        return 0.5, 0.5
    return 1.0 / (2 * (s - i) - 1), 1.0 / (2 * (s - i) - 2)


def search_node(oracle: OffsetOracle, root, k: int, s: int, cfg: PolarConfig) -> Point2:
    """Walk from ``root`` toward the boundary between directions k and k+1.

    Each of the ``s`` rounds moves a fraction of the current ray length along
    direction ``k`` and then along direction ``k+1``; the fractions shrink
    so that the last round moves half-way on both legs.  Displacements are
    taken along the direction unit vectors.

    Raises NodeSearchEscaped when an intermediate point leaves the mask.
    """
    if s < 1:
        raise ValueError(f"search depth must be >= 1, got {s}")
    n = cfg.n
    k = k % n
    k_next = (k + 1) % n
    u, u_next = cfg.directions[k], cfg.directions[k_next]
    c = np.asarray(as_point(root), dtype=float)
    try:
        for i in range(s):
            lam1, lam2 = _step_fractions(i, s)
            c = c + lam1 * oracle.distance(c, k) * u
            c = c + lam2 * oracle.distance(c, k_next) * u_next
    except OriginOutsideMask as exc:
        raise NodeSearchEscaped(f"node search for part {k} left the mask") from exc
    node = Point2(float(c[0]), float(c[1]))
    if not contains_points(oracle.polygon, [node], strict=True)[0]:
        raise NodeSearchEscaped(f"node of part {k} is not strictly inside the mask")
    return node


def sweep_angle(node, e_pre, e_nxt) -> tuple[float, float]:
    """Start angle and sweep (in [0, 2pi)) from node->e_pre to node->e_nxt.

    The sweep runs in the direction of increasing polar angle.
    """
    c = np.asarray(as_point(node))
    a = np.asarray(as_point(e_pre)) - c
    b = np.asarray(as_point(e_nxt)) - c
    if math.hypot(*a) < 1e-9 or math.hypot(*b) < 1e-9:
        raise DegenerateGeometry("node coincides with a major vein endpoint")
    cross = a[0] * b[1] - a[1] * b[0]
    dot = a[0] * b[0] + a[1] * b[1]
    sweep = math.atan2(cross, dot)
    if sweep < 0:
        sweep += TWO_PI
    return math.atan2(a[1], a[0]), sweep


def detect_twisty(node, e_pre, e_nxt, cfg: PolarConfig | None = None) -> bool:
    """True when the sweep at the node strictly exceeds a half turn."""
    return sweep_angle(node, e_pre, e_nxt)[1] > math.pi


def grow_minor_veins(oracle: OffsetOracle, node, e_pre, e_nxt, cfg: PolarConfig):
    """Minor veins from ``node`` for every global direction inside the sweep.

    Returns ``[(direction_index, endpoint), ...]`` in sweep order.  Directions
    on either end of the (open) interval are excluded.
    """
    node = as_point(node)
    start, sweep = sweep_angle(node, e_pre, e_nxt)
    offs = np.mod(cfg.angles - start, TWO_PI)
    eps = 1e-12
    picked = [int(j) for j in np.argsort(offs, kind="stable") if eps < offs[j] < sweep - eps]
    if not picked:
        return []
    dist = oracle(node)
    dirs = cfg.directions
    return [(j, Point2(*(np.asarray(node) + dist[j] * dirs[j]).tolist())) for j in picked]


def in_part_wedge(root, point, cfg: PolarConfig, k: int) -> bool:
    """Whether ``point`` lies in the sector between major rays k and k+1."""
    r = as_point(root)
    q = as_point(point)
    off = (math.atan2(q.y - r.y, q.x - r.x) - cfg.angles[k % cfg.n]) % TWO_PI
    return off <= TWO_PI / cfg.n + 1e-9 or off >= TWO_PI - 1e-9


def encode(
    p: Polygon,
    cfg: PolarConfig,
    s: int = DEFAULT_DEPTH,
    g: RasterGrid | None = None,
    refine: bool = True,
) -> VeinTree:
    """Encode ``p`` into a vein tree using exact ray casts.

    ``g`` is only consulted when the centroid falls outside the polygon and
    an interior fallback root has to be found.  With ``refine=False`` no node
    search is run and every part is left smooth.

    Minor endpoints that land outside their own part's sector (long rays that
    cross the object into a neighbouring part) are discarded; a part whose
    minor veins are all discarded is recorded as smooth.
    """
    p = as_polygon(p)
    if g is None:
        g = RasterGrid.around(p, supersample=4)
    root = interior_anchor(p, g)
    oracle = build_offset_oracle(p, cfg)
    majors = grow_major_veins(oracle, root, cfg)
    fallback = root != polygon_centroid(p)
    parts = []
    for k in range(cfg.n):
        if not refine:
            parts.append(PartRefinement(k, None, False))
            continue
        try:
            node = search_node(oracle, root, k, s, cfg)
        except NodeSearchEscaped:
            parts.append(PartRefinement(k, None, False))
            continue
        e_pre = majors.endpoints[k]
        e_nxt = majors.endpoints[(k + 1) % cfg.n]
        try:
            twisty = detect_twisty(node, e_pre, e_nxt, cfg)
        except DegenerateGeometry:
            twisty = False
        if not twisty:
            parts.append(PartRefinement(k, node, False))
            continue
        minor = [
            (j, e)
            for j, e in grow_minor_veins(oracle, node, e_pre, e_nxt, cfg)
            if in_part_wedge(root, e, cfg, k)
        ]
        if not minor:
            parts.append(PartRefinement(k, node, False))
            continue
        parts.append(
            PartRefinement(
                k,
                node,
                True,
                tuple(j for j, _ in minor),
                tuple(e for _, e in minor),
            )
        )
    return VeinTree(cfg, majors, tuple(parts), s, anchor_fallback=bool(fallback))


def contour_points(t: VeinTree, use_minor: bool = True) -> np.ndarray:
    pts = []
    for k in range(t.config.n):
        pts.append(t.majors.endpoints[k])
        if use_minor:
            pts.extend(np.asarray(e) for e in t.parts[k].minor_endpoints)
    pts = np.asarray(pts, dtype=float)
    # consecutive duplicates (including the wrap-around) add nothing
    nxt = np.roll(pts, -1, axis=0)
    keep = np.hypot(*(pts - nxt).T) > 1e-9
    return pts[keep]


def decode(t: VeinTree, use_minor: bool = True) -> Polygon:
    """Join major endpoints, each followed by its part's minor endpoints."""
    pts = contour_points(t, use_minor)
    if len(pts) < 3:
        raise DegenerateGeometry(f"reconstruction has only {len(pts)} distinct points")
    return Polygon(pts, validate=False)


def cover_ratio(
    p: Polygon,
    cfg: PolarConfig,
    s: int = DEFAULT_DEPTH,
    g: RasterGrid | None = None,
    use_minor: bool = True,
) -> float:
    """Raster IoU between ``p`` and its oracle vein reconstruction."""
    p = as_polygon(p)
    if g is None:
        g = RasterGrid.around(p, supersample=4)
    tree = encode(p, cfg, s, g, refine=use_minor)
    return raster_iou(p, decode(tree, use_minor), g)


def cover_ratios(
    p: Polygon,
    complexities: Sequence[int],
    s: int = DEFAULT_DEPTH,
    supersample: int = 4,
) -> dict[int, tuple[float, float]]:
    """``{n: (major_only_iou, veinmask_iou)}`` sharing one source raster."""
    p = as_polygon(p)
    g = RasterGrid.around(p, supersample=supersample)
    src = rasterize(p, g)
    out = {}
    for n in complexities:
        tree = encode(p, PolarConfig(int(n)), s, g, refine=True)
        major = mask_iou(src, rasterize(decode(tree, use_minor=False), g))
        vein = mask_iou(src, rasterize(decode(tree, use_minor=True), g))
        out[int(n)] = (major, vein)
    return out
