"""Per-pixel training targets: centroidness and the two centerness baselines."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codec import PolarConfig
from .exceptions import DegenerateGeometry
from .geometry import (
    Point2,
    Polygon,
    RasterGrid,
    as_point,
    as_polygon,
    boundary_distance,
    interior_anchor,
    polygon_centroid,
    rasterize,
    ray_distances,
)

# (lo, hi] max-extent interval of each pyramid level
FPN_RANGES = {3: (-1.0, 64.0), 4: (64.0, 128.0), 5: (128.0, 256.0), 6: (256.0, 512.0), 7: (512.0, math.inf)}


@dataclass(frozen=True)
class WeightMap:
    values: np.ndarray  # (H, W) in [0, 1]
    anchor: Point2 | None = None
    fallback: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"weight map must be 2-D, got shape {v.shape}")
        if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
            raise ValueError("weight map values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def to_bytes(self) -> np.ndarray:
        return np.round(255 * self.values).astype(np.uint8)

    def to_pgm(self, path):
        header = f"P5\n{self.width} {self.height}\n255\n".encode("ascii")
        Path(path).write_bytes(header + self.to_bytes().tobytes())

    def to_csv(self, path):
        rows = (",".join(f"{x:.6f}" for x in row) for row in self.values)
        Path(path).write_text("\n".join(rows) + "\n")


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError(f"{path} is not an 8-bit binary PGM")
    w, h = (int(t) for t in dims.split())
    return np.frombuffer(rest, dtype=np.uint8).reshape(h, w)


@dataclass(frozen=True)
class BoxExtents:
    left: float
    top: float
    right: float
    bottom: float

    def __post_init__(self):
        ext = (self.left, self.top, self.right, self.bottom)
        if min(ext) < 0:
            raise ValueError(f"box extents must be >= 0, got {ext}")
        if max(ext) <= 0:
            raise ValueError("at least one box extent must be positive")

    @property
    def max_extent(self) -> float:
        return max(self.left, self.top, self.right, self.bottom)

    @classmethod
    def from_point(cls, q, bbox) -> "BoxExtents":
        """Extents from ``q`` to an ``(x, y, w, h)`` box."""
        x, y = as_point(q)
        bx, by, bw, bh = bbox
        return cls(x - bx, y - by, bx + bw - x, by + bh - y)


def _contour_samples(p: Polygon, m: int) -> np.ndarray:
    """``m`` points spaced evenly by arc length along the boundary."""
    v = p.vertices
    e = np.roll(v, -1, axis=0) - v
    seg = np.hypot(e[:, 0], e[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.arange(m) * cum[-1] / m
    i = np.clip(np.searchsorted(cum, t, "right") - 1, 0, len(v) - 1)
    frac = (t - cum[i]) / seg[i]
    return v[i] + frac[:, None] * e[i]


def centroidness(p: Polygon, points, anchor=None, contour_points: int | None = None) -> np.ndarray:
    """Pointwise ``d_min / (d_c + d_min)`` (no containment indicator).

    ``d_c`` is the distance to ``anchor`` (the interior anchor by default);
    ``d_min`` is the exact distance to the boundary, or to ``contour_points``
    evenly spaced boundary samples when given.
    """
    p = as_polygon(p)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if anchor is None:
        anchor = interior_anchor(p, RasterGrid.around(p))
    a = np.asarray(as_point(anchor))
    if contour_points is None:
        dmin = boundary_distance(p, pts)
    else:
        samples = _contour_samples(p, int(contour_points))
        dmin = np.empty(len(pts))
        for i in range(0, len(pts), 4096):
            diff = pts[i : i + 4096, None, :] - samples[None]
            dmin[i : i + 4096] = np.sqrt(np.min(np.einsum("mij,mij->mi", diff, diff), axis=1))
    dc = np.hypot(*(pts - a).T)
    denom = dc + dmin
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(denom > 0, dmin / denom, 1.0)
    return w


def centroidness_map(p: Polygon, g: RasterGrid, contour_points: int | None = None) -> WeightMap:
    """Centroidness at every pixel of ``g`` (0 outside the mask).

    Pixels are evaluated at their centres except the pixel holding the
    anchor, which is evaluated at the anchor itself and so carries weight 1.
    The mask is the strict-interior pixel-centre raster, so a pixel with
    positive weight is exactly a mask pixel.
    """
    p = as_polygon(p)
    g1 = RasterGrid(g.width, g.height, 1, g.x0, g.y0)
    mask = rasterize(p, g1, strict=True).samples
    anchor = interior_anchor(p, g)
    fallback = anchor != polygon_centroid(p)
    centers = g1.pixel_centers()
    rows, cols = np.nonzero(mask)
    pts = centers[rows, cols]
    cell = g1.pixel_of(anchor)
    if cell is not None and mask[cell]:
        pts[(rows == cell[0]) & (cols == cell[1])] = anchor
    values = np.zeros((g.height, g.width))
    values[rows, cols] = centroidness(p, pts, anchor, contour_points)
    return WeightMap(values, anchor, bool(fallback))


def fcos_centerness(ext: BoxExtents) -> float:
    lr = max(ext.left, ext.right)
    tb = max(ext.top, ext.bottom)
    if lr <= 0 or tb <= 0:
        raise DegenerateGeometry("centerness needs positive extents on both axes")
    return math.sqrt(min(ext.left, ext.right) / lr * min(ext.top, ext.bottom) / tb)


def fcos_centerness_map(bbox, g: RasterGrid) -> WeightMap:
    """Box-midpoint centerness at pixel centres inside ``bbox = (x, y, w, h)``."""
    bx, by, bw, bh = (float(b) for b in bbox)
    if bw <= 0 or bh <= 0:
        raise DegenerateGeometry(f"box {bbox} has zero width or height")
    c = RasterGrid(g.width, g.height, 1, g.x0, g.y0).pixel_centers()
    left = c[..., 0] - bx
    top = c[..., 1] - by
    right = bx + bw - c[..., 0]
    bottom = by + bh - c[..., 1]
    inside = (left >= 0) & (right >= 0) & (top >= 0) & (bottom >= 0)
    lr = np.minimum(left, right) / np.maximum(left, right)
    tb = np.minimum(top, bottom) / np.maximum(top, bottom)
    with np.errstate(invalid="ignore"):
        v = np.where(inside, np.sqrt(np.clip(lr * tb, 0, 1)), 0.0)
    return WeightMap(np.nan_to_num(v))


def polarmask_centerness_map(p: Polygon, cfg: PolarConfig, g: RasterGrid) -> WeightMap:
    """``min / max`` of the ``n`` ray distances at every mask pixel centre."""
    p = as_polygon(p)
    g1 = RasterGrid(g.width, g.height, 1, g.x0, g.y0)
    mask = rasterize(p, g1, strict=True).samples
    rows, cols = np.nonzero(mask)
    pts = g1.pixel_centers()[rows, cols]
    values = np.zeros((g.height, g.width))
    if len(pts):
        dirs = cfg.directions
        o = np.repeat(pts, cfg.n, axis=0)
        u = np.tile(dirs, (len(pts), 1))
        d = ray_distances(p, o, u).reshape(len(pts), cfg.n)
        values[rows, cols] = d.min(axis=1) / d.max(axis=1)
    return WeightMap(values)


def fpn_level_assign(ext: BoxExtents) -> int:
    """Pyramid level whose (lo, hi] interval holds the largest extent."""
    m = ext.max_extent
    for level, (lo, hi) in FPN_RANGES.items():
        if lo < m <= hi:
            return level
    return 7
