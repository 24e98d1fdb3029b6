"""Points, line segments and exact segment Hausdorff distance.

Coordinates live in the image frame scaled to [0, 100] on both axes, with
y growing downward, so a B-line runs from its ``top`` endpoint (pleural
line) to its ``bottom`` endpoint (bottom of the field).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


class Point2(NamedTuple):
    x: float
    y: float


def _as_point(p) -> Point2:
    if isinstance(p, Point2):
        return p
    x, y = p
    return Point2(float(x), float(y))


@dataclass(frozen=True, slots=True)
class LineSegment:
    """Segment with canonical endpoint order.

    Endpoints are reordered on construction so that ``top.y <= bottom.y``;
    when the y values tie, the endpoint with the smaller x becomes ``top``.
    Zero-length segments are representable (see ``is_degenerate``).
    """

    top: Point2
    bottom: Point2

    def __post_init__(self):
        a, b = _as_point(self.top), _as_point(self.bottom)
        if (b.y, b.x) < (a.y, a.x):
            a, b = b, a
        object.__setattr__(self, "top", a)
        object.__setattr__(self, "bottom", b)

    @classmethod
    def from_coords(cls, x1, y1, x2, y2) -> LineSegment:
        return cls(Point2(float(x1), float(y1)), Point2(float(x2), float(y2)))

    def to_coords(self) -> list[float]:
        return [self.top.x, self.top.y, self.bottom.x, self.bottom.y]

    @property
    def is_degenerate(self) -> bool:
        return self.top == self.bottom

    @property
    def length(self) -> float:
        return math.hypot(self.bottom.x - self.top.x, self.bottom.y - self.top.y)

    def translate(self, dx: float, dy: float) -> LineSegment:
        return LineSegment(
            Point2(self.top.x + dx, self.top.y + dy),
            Point2(self.bottom.x + dx, self.bottom.y + dy),
        )


def _point_segment(px, py, ax, ay, bx, by) -> float:
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / denom
    if t <= 0.0:
        return math.hypot(px - ax, py - ay)
    if t >= 1.0:
        return math.hypot(px - bx, py - by)
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def point_segment_distance(p, s: LineSegment) -> float:
    """Euclidean distance from ``p`` to the nearest point of ``s``."""
    px, py = p
    return _point_segment(px, py, s.top.x, s.top.y, s.bottom.x, s.bottom.y)


def segment_hausdorff(a: LineSegment, b: LineSegment) -> float:
    """Symmetric Hausdorff distance between two segments.

    The distance to a convex set is convex along a segment, so each directed
    supremum is reached at an endpoint and four point-to-segment distances
    give the exact value.
    """
    (atx, aty), (abx, aby) = a.top, a.bottom
    (btx, bty), (bbx, bby) = b.top, b.bottom
    return max(
        _point_segment(atx, aty, btx, bty, bbx, bby),
        _point_segment(abx, aby, btx, bty, bbx, bby),
        _point_segment(btx, bty, atx, aty, abx, aby),
        _point_segment(bbx, bby, atx, aty, abx, aby),
    )
