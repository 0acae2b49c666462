"""scikit-learn style wrappers around the vein codec and target generators.

``X`` is always a sequence of polygons (``Polygon`` objects or ``(N, 2)``
vertex arrays), one per instance.
"""
from __future__ import annotations

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .codec import DEFAULT_DEPTH, PolarConfig, VeinTree, decode, encode
from .geometry import Polygon, RasterGrid, mask_iou, rasterize
from .targets import centroidness_map, fcos_centerness_map, polarmask_centerness_map


def check_polygon(p) -> Polygon:
    """Validate one instance outline and return it as a :class:`Polygon`."""
    if isinstance(p, Polygon):
        return p
    return Polygon(np.asarray(p, dtype=float))


def check_polygons(X) -> list[Polygon]:
    if isinstance(X, Polygon) or (isinstance(X, np.ndarray) and X.ndim == 2 and X.dtype != object):
        raise ValueError("expected a sequence of polygons, got a single polygon; wrap it in a list")
    return [check_polygon(p) for p in X]


def _check_int(value, name, low, allowed=None):
    if isinstance(value, bool) or int(value) != value or value < low:
        raise ValueError(f"{name} must be an integer >= {low}, got {value!r}")
    if allowed is not None and value not in allowed:
        raise ValueError(f"{name} must be one of {allowed}, got {value!r}")


class VeinMaskEncoder(TransformerMixin, BaseEstimator):
    """Encode instance polygons into vein trees with oracle distances.

    Parameters
    ----------
    n_directions : int, default 8
        Design complexity, the number of polar directions.
    depth : int, default 3
        Node search depth.
    use_minor : bool, default True
        Grow minor veins in twisty parts. False gives the major-only contour.
    supersample : int, default 4
        Sub-samples per pixel axis for the raster used by ``score`` and for
        the interior-anchor fallback.
    angle_offset : float, default 0.0
        Rotation of the polar frame in radians.
    n_jobs : int or None
        Passed to joblib; results keep input order.

    The encoder has no trainable state. ``fit`` validates the parameters and
    freezes ``config_``.
    """

    def __init__(self, n_directions=8, depth=DEFAULT_DEPTH, use_minor=True, supersample=4, angle_offset=0.0, n_jobs=None):
        self.n_directions = n_directions
        self.depth = depth
        self.use_minor = use_minor
        self.supersample = supersample
        self.angle_offset = angle_offset
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        _check_int(self.n_directions, "n_directions", 3)
        _check_int(self.depth, "depth", 1)
        _check_int(self.supersample, "supersample", 1, (1, 2, 4, 8))
        self.config_ = PolarConfig(int(self.n_directions), float(self.angle_offset))
        if X is not None:
            self.n_instances_seen_ = len(check_polygons(X))
        return self

    def _encode_one(self, p: Polygon) -> VeinTree:
        g = RasterGrid.around(p, self.supersample)
        return encode(p, self.config_, self.depth, g, refine=self.use_minor)

    def transform(self, X) -> list[VeinTree]:
        check_is_fitted(self, "config_")
        polys = check_polygons(X)
        return Parallel(n_jobs=self.n_jobs)(delayed(self._encode_one)(p) for p in polys)

    def inverse_transform(self, trees) -> list[Polygon]:
        return [decode(t, self.use_minor) for t in trees]

    def _cover_one(self, p: Polygon) -> float:
        g = RasterGrid.around(p, self.supersample)
        tree = encode(p, self.config_, self.depth, g, refine=self.use_minor)
        return mask_iou(rasterize(p, g), rasterize(decode(tree, self.use_minor), g))

    def cover_ratios(self, X) -> np.ndarray:
        """Per-instance raster IoU between each polygon and its reconstruction."""
        check_is_fitted(self, "config_")
        polys = check_polygons(X)
        return np.asarray(Parallel(n_jobs=self.n_jobs)(delayed(self._cover_one)(p) for p in polys))

    def score(self, X, y=None) -> float:
        """Mean cover ratio over ``X``."""
        return float(self.cover_ratios(X).mean())


_TARGET_KINDS = ("centroidness", "fcos", "polarmask")


class CentroidnessTargets(TransformerMixin, BaseEstimator):
    """Per-instance weight maps on a window around each polygon.

    ``kind`` selects ``"centroidness"``, the box-midpoint ``"fcos"``
    centerness or the ray-ratio ``"polarmask"`` centerness.
    """

    def __init__(self, kind="centroidness", n_directions=36, margin=1, contour_points=None):
        self.kind = kind
        self.n_directions = n_directions
        self.margin = margin
        self.contour_points = contour_points

    def fit(self, X=None, y=None):
        if self.kind not in _TARGET_KINDS:
            raise ValueError(f"kind must be one of {_TARGET_KINDS}, got {self.kind!r}")
        _check_int(self.n_directions, "n_directions", 3)
        _check_int(self.margin, "margin", 0)
        if self.contour_points is not None:
            _check_int(self.contour_points, "contour_points", 3)
        self.config_ = PolarConfig(int(self.n_directions))
        return self

    def _map(self, p: Polygon):
        g = RasterGrid.around(p, 1, self.margin)
        if self.kind == "centroidness":
            return centroidness_map(p, g, self.contour_points)
        if self.kind == "fcos":
            xmin, ymin, xmax, ymax = p.bounds
            return fcos_centerness_map((xmin, ymin, xmax - xmin, ymax - ymin), g)
        return polarmask_centerness_map(p, self.config_, g)

    def transform(self, X):
        check_is_fitted(self, "config_")
        return [self._map(p) for p in check_polygons(X)]
