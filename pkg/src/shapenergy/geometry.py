"""Area-preserving parametric footprints built from four facade offsets.

The base plan is an axis-aligned rectangle with the long side running
east-west (corners a=(0,0), b=(L,0), c=(L,W), d=(0,W), counter-clockwise,
so the y axis points north).  Each side can bump outward or notch inward:
the middle half of side i (parameter t in [1/4, 3/4] along the side) is
displaced by offset x_i along the side's outward normal, positive meaning
outward.  The result is then scaled uniformly about its area centroid so
the floor area returns to the target.

Offsets are capped at 3.5 m, well below W/4, so the displaced segments can
never reach a corner or an opposite side: every in-range parameter vector
yields a simple rectilinear polygon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OFFSET_LIMIT = 3.5


class ShapeRangeError(ValueError):
    """A facade offset lies outside [-3.5, 3.5] m."""


class PolygonError(ValueError):
    """A vertex list does not describe a usable polygon."""


@dataclass(frozen=True)
class ShapeParams:
    """Facade offsets (meters) for the south, east, north and west sides."""

    x1: float
    x2: float
    x3: float
    x4: float

    def __post_init__(self):
        for name, v in self.as_dict().items():
            if not (-OFFSET_LIMIT <= v <= OFFSET_LIMIT):
                raise ShapeRangeError(
                    f"{name}={v} outside [-{OFFSET_LIMIT}, {OFFSET_LIMIT}] m"
                )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.x2, self.x3, self.x4)

    def as_dict(self) -> dict[str, float]:
        return {"x1": self.x1, "x2": self.x2, "x3": self.x3, "x4": self.x4}


@dataclass(frozen=True)
class GeometryConfig:
    """Plan area target and aspect ratio of the base rectangle."""

    area_target: float = 990.0
    width_to_length: float = 0.5

    @property
    def length(self) -> float:
        """Long side L (east-west), from L * (ratio * L) = area."""
        return math.sqrt(self.area_target / self.width_to_length)

    @property
    def width(self) -> float:
        """Short side W (north-south)."""
        return self.width_to_length * self.length


class Footprint:
    """Closed counter-clockwise rectilinear polygon (vertices in meters)."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise PolygonError("a footprint needs at least 3 (x, y) vertices")
        v.setflags(write=False)
        self.vertices = v
        self.area = polygon_area(self)
        self.perimeter = polygon_perimeter(self)

    def __repr__(self):
        return f"Footprint({len(self.vertices)} vertices, area={self.area:.3f} m2)"


def _shoelace_terms(f: Footprint) -> np.ndarray:
    v = f.vertices
    nxt = np.roll(v, -1, axis=0)
    return v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]


def polygon_area(f: Footprint) -> float:
    """Signed shoelace area; positive for counter-clockwise vertices."""
    if len(f.vertices) < 3:
        raise PolygonError("area needs at least 3 vertices")
    return 0.5 * float(np.sum(_shoelace_terms(f)))


def polygon_perimeter(f: Footprint) -> float:
    v = f.vertices
    if len(v) < 3:
        raise PolygonError("perimeter needs at least 3 vertices")
    edges = np.roll(v, -1, axis=0) - v
    return float(np.sum(np.hypot(edges[:, 0], edges[:, 1])))


def polygon_centroid(f: Footprint) -> tuple[float, float]:
    """Area centroid of a simple polygon."""
    v = f.vertices
    nxt = np.roll(v, -1, axis=0)
    cross = _shoelace_terms(f)
    a = cross.sum() / 2.0
    cx = float(np.sum((v[:, 0] + nxt[:, 0]) * cross) / (6.0 * a))
    cy = float(np.sum((v[:, 1] + nxt[:, 1]) * cross) / (6.0 * a))
    return cx, cy


def base_rectangle(cfg: GeometryConfig) -> Footprint:
    """The unperturbed plan: rectangle a-b-c-d, counter-clockwise."""
    L, W = cfg.length, cfg.width
    return Footprint([(0.0, 0.0), (L, 0.0), (L, W), (0.0, W)])


# Sides in traversal order: (start corner, end corner, outward normal).
# Corner indices refer to the base rectangle's a, b, c, d vertex list.
_SIDES = (
    (0, 1, (0.0, -1.0)),  # south a->b
    (1, 2, (1.0, 0.0)),   # east  b->c
    (2, 3, (0.0, 1.0)),   # north c->d
    (3, 0, (-1.0, 0.0)),  # west  d->a
)


def build_footprint(
    p: ShapeParams, cfg: GeometryConfig, scale_to_area: bool = True
) -> Footprint:
    """Construct the offset polygon for `p`, area-normalized by default.

    With ``scale_to_area=False`` the raw offset polygon is returned before
    the centroid scaling step (useful for containment reasoning: offsets
    only ever move the middle half of a side, so raw polygons nest).
    """
    L, W = cfg.length, cfg.width
    corners = [(0.0, 0.0), (L, 0.0), (L, W), (0.0, W)]
    offsets = p.as_tuple()

    verts: list[tuple[float, float]] = []
    for (i0, i1, (nx, ny)), x in zip(_SIDES, offsets):
        px, py = corners[i0]
        qx, qy = corners[i1]
        verts.append((px, py))
        if x != 0.0:
            q1 = (px + 0.25 * (qx - px), py + 0.25 * (qy - py))
            q3 = (px + 0.75 * (qx - px), py + 0.75 * (qy - py))
            verts.append(q1)
            verts.append((q1[0] + x * nx, q1[1] + x * ny))
            verts.append((q3[0] + x * nx, q3[1] + x * ny))
            verts.append(q3)

    if len(verts) == 4:
        # all offsets zero: the base rectangle already has the target area
        return Footprint(verts)

    raw = Footprint(verts)
    if not scale_to_area:
        return raw

    s = math.sqrt(cfg.area_target / raw.area)
    cx, cy = polygon_centroid(raw)
    v = raw.vertices.copy()
    v[:, 0] = cx + s * (v[:, 0] - cx)
    v[:, 1] = cy + s * (v[:, 1] - cy)
    return Footprint(v)


def mirror_ew(p: ShapeParams) -> ShapeParams:
    """Parameters of the footprint mirrored about the north-south axis.

    Mirroring swaps the east and west offsets and leaves south and north
    in place; the resulting footprint is the reflection of the original
    about x = L/2, up to vertex order.
    """
    return ShapeParams(p.x1, p.x4, p.x3, p.x2)


def contains_points(f: Footprint, pts) -> np.ndarray:
    """Even-odd containment for an array of query points, vectorized.

    Points exactly on the boundary count as inside: for the
    counter-clockwise polygons used here the interior lies on the left of
    every directed edge, so each edge belongs to the region it bounds.
    Boundary detection uses exact floating-point comparisons, which is
    well-defined for the axis-parallel edges this library produces.
    """
    pts = np.asarray(pts, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]

    v = f.vertices
    nxt = np.roll(v, -1, axis=0)
    x1, y1 = v[:, 0][None, :], v[:, 1][None, :]
    x2, y2 = nxt[:, 0][None, :], nxt[:, 1][None, :]

    # boundary: zero cross product and inside the edge's bounding box
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    in_box = (
        (px >= np.minimum(x1, x2)) & (px <= np.maximum(x1, x2))
        & (py >= np.minimum(y1, y2)) & (py <= np.maximum(y1, y2))
    )
    on_edge = ((cross == 0.0) & in_box).any(axis=1)

    # crossing parity with the half-open-in-y rule (vertices counted once)
    spans = (y1 <= py) != (y2 <= py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_int = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    crossings = (spans & (x_int > px)).sum(axis=1)

    inside = on_edge | (crossings % 2 == 1)
    return inside[0] if single else inside


def contains_point(f: Footprint, q) -> bool:
    """Scalar version of `contains_points`."""
    return bool(contains_points(f, q))
