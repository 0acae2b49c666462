"""Exception hierarchy shared by every veingrow module."""


class VeinGrowError(Exception):
    """Base class for all errors raised by veingrow."""


class DegenerateGeometry(VeinGrowError, ValueError):
    """A polygon, point set or union has (near) zero extent."""


class OriginOutsideMask(VeinGrowError, ValueError):
    """A ray origin or query point is not strictly inside the polygon."""


class InternalGeometryError(VeinGrowError, RuntimeError):
    """A ray from an interior origin found no boundary crossing."""


class OutOfBounds(VeinGrowError, ValueError):
    """A polygon does not fit inside the raster grid window."""


class NodeSearchEscaped(VeinGrowError):
    """An intermediate node-search point left the mask."""


class DegenerateTarget(VeinGrowError, ValueError):
    """Target distances sum to (almost) zero."""


class NumericalDomain(VeinGrowError, ValueError):
    """A probability sits on or outside the open interval (0, 1)."""


class ShapeError(VeinGrowError, ValueError):
    """Array shapes do not line up."""


class ParseError(VeinGrowError, ValueError):
    """An annotation file could not be read or decoded."""


class EmptyCorpus(VeinGrowError, ValueError):
    """No usable instances remain."""


class ParamError(VeinGrowError, ValueError):
    """Invalid parameters for a synthetic shape."""
