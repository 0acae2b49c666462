"""Planar geometry used by the vein codec and the target generators.

Coordinates follow the image convention: x grows to the right, y grows
downward, and an angle is measured from +x toward +y.  Polygons are single
rings stored as an ``(N, 2)`` float array without a repeated closing vertex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree
from shapely.geometry import LinearRing

from .exceptions import (
    DegenerateGeometry,
    InternalGeometryError,
    OriginOutsideMask,
    OutOfBounds,
)

AREA_EPS = 1e-9
VERTEX_EPS = 1e-9
BOUNDARY_EPS = 1e-9

# keeps broadcast (points x edges) temporaries around 16 MB
_CHUNK = 1 << 21


class Point2(NamedTuple):
    x: float
    y: float


def as_point(q) -> Point2:
    x, y = (float(c) for c in q)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"point must be finite, got {q!r}")
    return Point2(x, y)


class Polygon:
    """Immutable simple polygon.

    Parameters
    ----------
    vertices : array-like of shape (N, 2)
        Ordered ring. A closing vertex equal to the first one is dropped.
    validate : bool, default True
        Check the simple / non-degenerate invariants. Reconstructed contours
        are built with ``validate=False`` since they may self-intersect.
    """

    __slots__ = ("_v", "_area")

    def __init__(self, vertices, validate: bool = True):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise DegenerateGeometry(f"vertices must have shape (N, 2), got {v.shape}")
        if len(v) > 3 and np.all(np.abs(v[0] - v[-1]) <= VERTEX_EPS):
            v = v[:-1]
        if len(v) < 3:
            raise DegenerateGeometry(f"a polygon needs >= 3 vertices, got {len(v)}")
        if not np.all(np.isfinite(v)):
            raise DegenerateGeometry("polygon vertices must be finite")
        v.setflags(write=False)
        self._v = v
        self._area = _signed_area(v)
        if validate:
            self._validate()

    def _validate(self):
        if abs(self._area) < AREA_EPS:
            raise DegenerateGeometry(f"polygon area {abs(self._area):.3g} is below {AREA_EPS}")
        if cKDTree(self._v).query_pairs(VERTEX_EPS):
            raise DegenerateGeometry("polygon has duplicate vertices")
        if not LinearRing(self._v).is_simple:
            raise DegenerateGeometry("polygon is self-intersecting")

    @property
    def vertices(self) -> np.ndarray:
        return self._v

    @property
    def area(self) -> float:
        return abs(self._area)

    @property
    def signed_area(self) -> float:
        return self._area

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        lo = self._v.min(axis=0)
        hi = self._v.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self._v, np.roll(self._v, -1, axis=0)

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(self._v + (dx, dy), validate=False)

    def __len__(self):
        return len(self._v)

    def __eq__(self, other):
        return isinstance(other, Polygon) and np.array_equal(self._v, other._v)

    def __hash__(self):
        return hash(self._v.tobytes())

    def __repr__(self):
        return f"Polygon(n_vertices={len(self._v)}, area={self.area:.6g})"


def as_polygon(p) -> Polygon:
    return p if isinstance(p, Polygon) else Polygon(p)


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    xr, yr = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.dot(x, yr) - np.dot(xr, y))


def polygon_centroid(p: Polygon) -> Point2:
    """Area-weighted centroid from the shoelace moments."""
    v = as_polygon(p).vertices
    # shift to the first vertex for better conditioning on far-off coordinates
    o = v[0]
    x, y = (v - o).T
    xr, yr = np.roll(x, -1), np.roll(y, -1)
    cross = x * yr - xr * y
    a = 0.5 * cross.sum()
    if abs(a) < AREA_EPS:
        raise DegenerateGeometry("centroid of a zero-area polygon is undefined")
    cx = ((x + xr) * cross).sum() / (6.0 * a)
    cy = ((y + yr) * cross).sum() / (6.0 * a)
    return Point2(float(cx + o[0]), float(cy + o[1]))


def _chunks(m: int, n: int):
    step = max(1, _CHUNK // max(n, 1))
    for i in range(0, m, step):
        yield slice(i, min(m, i + step))


def _even_odd(v: np.ndarray, pts: np.ndarray) -> np.ndarray:
    a, b = v, np.roll(v, -1, axis=0)
    out = np.empty(len(pts), dtype=bool)
    for sl in _chunks(len(pts), len(v)):
        px = pts[sl, 0:1]
        py = pts[sl, 1:2]
        spans = (a[:, 1] > py) != (b[:, 1] > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a[:, 0] + (py - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
        out[sl] = np.count_nonzero(spans & (px < xc), axis=1) % 2 == 1
    return out


def boundary_distance(p: Polygon, points) -> np.ndarray:
    """Euclidean distance from each point to the nearest boundary edge."""
    v = as_polygon(p).vertices
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = v
    e = np.roll(v, -1, axis=0) - a
    ee = np.einsum("ij,ij->i", e, e)
    out = np.empty(len(pts))
    for sl in _chunks(len(pts), len(v)):
        w = pts[sl, None, :] - a[None, :, :]
        t = np.clip(np.einsum("mij,ij->mi", w, e) / ee, 0.0, 1.0)
        d = w - t[..., None] * e
        out[sl] = np.sqrt(np.min(np.einsum("mij,mij->mi", d, d), axis=1))
    return out


def contains_points(p: Polygon, points, strict: bool = False) -> np.ndarray:
    """Vectorised containment. Boundary points are inside unless ``strict``."""
    v = as_polygon(p).vertices
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = boundary_distance(p, pts)
    on_edge = d <= BOUNDARY_EPS
    inside = _even_odd(v, pts)
    if strict:
        return inside & ~on_edge
    return inside | on_edge


def point_in_polygon(p: Polygon, q) -> bool:
    """Even-odd containment; points on the boundary count as inside."""
    return bool(contains_points(p, [as_point(q)])[0])


def is_strictly_inside(p: Polygon, q) -> bool:
    return bool(contains_points(p, [as_point(q)], strict=True)[0])


def ray_distances(p: Polygon, origins, directions) -> np.ndarray:
    """Farthest boundary hit along each ray, ``nan`` where a ray misses.

    ``origins`` and ``directions`` are ``(M, 2)`` arrays; directions must be
    unit vectors. No containment check is made here.
    """
    v = as_polygon(p).vertices
    o = np.atleast_2d(np.asarray(origins, dtype=float))
    u = np.atleast_2d(np.asarray(directions, dtype=float))
    a = v
    e = np.roll(v, -1, axis=0) - a
    elen = np.hypot(e[:, 0], e[:, 1])
    out = np.full(len(o), np.nan)
    for sl in _chunks(len(o), len(v)):
        ux = u[sl, 0:1]
        uy = u[sl, 1:2]
        wx = a[:, 0] - o[sl, 0:1]
        wy = a[:, 1] - o[sl, 1:2]
        denom = ux * e[:, 1] - uy * e[:, 0]
        w_x_u = wx * uy - wy * ux
        parallel = np.abs(denom) <= 1e-12 * elen
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (wx * e[:, 1] - wy * e[:, 0]) / denom
            s = w_x_u / denom
        hit = ~parallel & (t > 1e-12) & (s >= -1e-12) & (s <= 1 + 1e-12)
        best = np.where(hit, t, -np.inf).max(axis=1)
        # a ray running along a collinear edge leaves it at the far end
        coll = parallel & (np.abs(w_x_u) <= 1e-12 * np.maximum(elen, 1.0))
        if coll.any():
            t0 = wx * ux + wy * uy
            t1 = t0 + e[:, 0] * ux + e[:, 1] * uy
            tc = np.where(coll, np.maximum(t0, t1), -np.inf)
            tc = np.where(tc > 1e-12, tc, -np.inf)
            best = np.maximum(best, tc.max(axis=1))
        out[sl] = np.where(np.isfinite(best), best, np.nan)
    return out


def unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def ray_cast_distance(p: Polygon, origin, angle: float) -> float:
    """Distance from an interior origin to the farthest boundary crossing.

    Multi-hit rays take the maximum so that star-shaped reconstructions
    cover as much of the mask as possible.
    """
    p = as_polygon(p)
    o = as_point(origin)
    if not is_strictly_inside(p, o):
        raise OriginOutsideMask(f"ray origin {tuple(o)} is not strictly inside the polygon")
    d = ray_distances(p, [o], [unit(angle)])[0]
    if not np.isfinite(d):
        raise InternalGeometryError(f"ray from {tuple(o)} at angle {angle} hit nothing")
    return float(d)


@dataclass(frozen=True)
class RasterGrid:
    """Pixel window ``[x0, x0 + width] x [y0, y0 + height]``.

    Each pixel is sampled at ``supersample**2`` evenly spaced sub-pixel
    centres.
    """

    width: int
    height: int
    supersample: int = 1
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise ValueError("grid width and height must be integers")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.supersample not in (1, 2, 4, 8):
            raise ValueError(f"supersample must be one of 1, 2, 4, 8, got {self.supersample}")

    @classmethod
    def around(cls, p: Polygon, supersample: int = 1, margin: int = 1) -> "RasterGrid":
        """Smallest integer-aligned window holding ``p`` plus ``margin`` pixels."""
        xmin, ymin, xmax, ymax = as_polygon(p).bounds
        x0 = math.floor(xmin) - margin
        y0 = math.floor(ymin) - margin
        w = math.ceil(xmax) + margin - x0
        h = math.ceil(ymax) + margin - y0
        return cls(int(w), int(h), supersample, float(x0), float(y0))

    def with_supersample(self, supersample: int) -> "RasterGrid":
        return RasterGrid(self.width, self.height, supersample, self.x0, self.y0)

    def sample_axes(self) -> tuple[np.ndarray, np.ndarray]:
        ss = self.supersample
        xs = self.x0 + (np.arange(self.width * ss) + 0.5) / ss
        ys = self.y0 + (np.arange(self.height * ss) + 0.5) / ss
        return xs, ys

    def pixel_centers(self) -> np.ndarray:
        """``(H, W, 2)`` array of pixel-centre coordinates."""
        xs = self.x0 + np.arange(self.width) + 0.5
        ys = self.y0 + np.arange(self.height) + 0.5
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)

    def pixel_of(self, q) -> tuple[int, int] | None:
        """``(row, col)`` of the pixel containing ``q``, or None."""
        x, y = as_point(q)
        col = math.floor(x - self.x0)
        row = math.floor(y - self.y0)
        if 0 <= col < self.width and 0 <= row < self.height:
            return row, col
        return None


@dataclass(frozen=True)
class RasterMask:
    """Sub-sample occupancy of a polygon on a grid."""

    grid: RasterGrid
    samples: np.ndarray  # (H * ss, W * ss) bool

    @property
    def counts(self) -> np.ndarray:
        ss = self.grid.supersample
        h, w = self.grid.height, self.grid.width
        return self.samples.reshape(h, ss, w, ss).sum(axis=(1, 3))

    @property
    def coverage(self) -> np.ndarray:
        return self.counts / self.grid.supersample**2

    @property
    def binary(self) -> np.ndarray:
        return self.coverage >= 0.5

    @property
    def area(self) -> float:
        return np.count_nonzero(self.samples) / self.grid.supersample**2


def _check_fits(v: np.ndarray, g: RasterGrid):
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    if (
        lo[0] < g.x0 - BOUNDARY_EPS
        or lo[1] < g.y0 - BOUNDARY_EPS
        or hi[0] > g.x0 + g.width + BOUNDARY_EPS
        or hi[1] > g.y0 + g.height + BOUNDARY_EPS
    ):
        raise OutOfBounds(
            f"polygon bounds ({lo[0]:g}, {lo[1]:g})-({hi[0]:g}, {hi[1]:g}) exceed grid "
            f"({g.x0:g}, {g.y0:g})-({g.x0 + g.width:g}, {g.y0 + g.height:g})"
        )


def rasterize(p: Polygon, g: RasterGrid, strict: bool = False) -> RasterMask:
    """Even-odd scanline fill sampled at sub-pixel centres.

    Samples exactly on the boundary follow the usual top-left rule (spans are
    half-open), which keeps fractional areas unbiased. With ``strict=True``
    they are dropped instead, so every set sample is strictly interior.
    """
    v = as_polygon(p).vertices
    _check_fits(v, g)
    xs, ys = g.sample_axes()
    samples = np.zeros((len(ys), len(xs)), dtype=bool)

    a = v
    b = np.roll(v, -1, axis=0)
    r0 = int(np.searchsorted(ys, v[:, 1].min(), "left"))
    r1 = int(np.searchsorted(ys, v[:, 1].max(), "right"))
    step = max(1, _CHUNK // len(v))
    for start in range(r0, r1, step):
        stop = min(r1, start + step)
        y = ys[start:stop, None]
        cross = (a[:, 1] <= y) != (b[:, 1] <= y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
        xc = np.sort(np.where(cross, xc, np.inf), axis=1)
        n_cross = np.count_nonzero(cross, axis=1)
        kmax = int(n_cross.max()) if len(n_cross) else 0
        if kmax == 0:
            continue
        left = xc[:, 0:kmax:2]
        right = xc[:, 1:kmax:2]
        rows, k = np.nonzero(np.isfinite(right))
        li = np.searchsorted(xs, left[rows, k], "right" if strict else "left")
        ri = np.searchsorted(xs, right[rows, k], "left")
        ri = np.maximum(ri, li)
        diff = np.zeros((stop - start, len(xs) + 1), dtype=np.int32)
        np.add.at(diff, (rows, li), 1)
        np.add.at(diff, (rows, ri), -1)
        samples[start:stop] = np.cumsum(diff[:, :-1], axis=1) > 0

    if not strict:
        return RasterMask(g, samples)
    # samples sitting on a horizontal edge are boundary points
    flat = a[:, 1] == b[:, 1]
    for i in np.nonzero(flat)[0]:
        rows = np.nonzero(ys == a[i, 1])[0]
        if len(rows):
            lo, hi = sorted((a[i, 0], b[i, 0]))
            cols = (xs >= lo) & (xs <= hi)
            samples[np.ix_(rows, np.nonzero(cols)[0])] = False
    return RasterMask(g, samples)


def mask_iou(ma: RasterMask, mb: RasterMask) -> float:
    if ma.grid != mb.grid:
        raise ValueError("masks were rasterised on different grids")
    inter = np.count_nonzero(ma.samples & mb.samples)
    union = np.count_nonzero(ma.samples | mb.samples)
    if union == 0:
        raise DegenerateGeometry("IoU of two empty masks is undefined")
    return inter / union


def raster_iou(a: Polygon, b: Polygon, g: RasterGrid) -> float:
    """IoU of two polygons over the sub-sample occupancy of ``g``."""
    return mask_iou(rasterize(a, g), rasterize(b, g))


def interior_anchor(p: Polygon, g: RasterGrid) -> Point2:
    """Centroid when strictly inside, else the deepest interior sample of ``g``."""
    p = as_polygon(p)
    c = polygon_centroid(p)
    if is_strictly_inside(p, c):
        return c
    mask = rasterize(p, g)
    rows, cols = np.nonzero(mask.samples)
    if len(rows) == 0:
        raise DegenerateGeometry("polygon has no interior sample at this grid resolution")
    xs, ys = g.sample_axes()
    pts = np.column_stack([xs[cols], ys[rows]])
    d = boundary_distance(p, pts)
    best = int(np.argmax(d))
    return Point2(float(pts[best, 0]), float(pts[best, 1]))


def rotate(p: Polygon, angle: float, center: Sequence[float]) -> Polygon:
    c, s = math.cos(angle), math.sin(angle)
    v = as_polygon(p).vertices - center
    r = v @ np.array([[c, s], [-s, c]])
    return Polygon(r + center, validate=False)
