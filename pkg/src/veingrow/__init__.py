"""Vein-growth contour encoding of instance masks with oracle distances."""
from .codec import (
    OffsetOracle,
    PartRefinement,
    PolarConfig,
    VeinTree,
    build_offset_oracle,
    cover_ratio,
    decode,
    detect_twisty,
    encode,
    grow_major_veins,
    grow_minor_veins,
    search_node,
)
from .estimator import CentroidnessTargets, VeinMaskEncoder
from .exceptions import *  # noqa: F403
from .geometry import (
    Point2,
    Polygon,
    RasterGrid,
    interior_anchor,
    point_in_polygon,
    polygon_centroid,
    raster_iou,
    rasterize,
    ray_cast_distance,
)

__version__ = "0.1.0"
