"""Planar geometry primitives: points, convex polygons, hulls, rigid motions.

These are the readable, allocation-happy reference versions.  The box search
and the shape search go through the compiled kernels in ``_kernels``; tests
keep the two in agreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class GeometryError(ValueError):
    """Raised for inputs outside an operation's domain."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Polygon:
    """Counter-clockwise vertex list of a convex polygon (2-gons allowed)."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise GeometryError("a polygon needs at least 2 vertices")

    def __len__(self):
        return len(self.vertices)

    def as_array(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.vertices], dtype=float)

    @classmethod
    def from_array(cls, xy) -> "Polygon":
        return cls(tuple(Point(float(x), float(y)) for x, y in np.asarray(xy, dtype=float)))

    def perimeter(self) -> float:
        """Length of the closed boundary (a 2-gon counts its segment twice)."""
        vs = self.vertices
        return sum(math.dist(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs)))


def _as_points(points: Iterable) -> list[Point]:
    return [p if isinstance(p, Point) else Point(float(p[0]), float(p[1])) for p in points]


def cross(o: Point, a: Point, b: Point) -> float:
    """z-component of (a - o) x (b - o); positive for a left turn."""
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def convex_hull(points: Iterable) -> Polygon:
    """Andrew's monotone chain.  Collinear boundary points are dropped.

    Collinear input gives the 2-gon of its extreme points; a single point (or
    repeated copies of one) gives a 2-gon with both vertices equal.
    """
    pts = sorted(set((p.x, p.y) for p in _as_points(points)))
    if not pts:
        raise GeometryError("convex hull of an empty point set")
    if len(pts) == 1:
        p = Point(*pts[0])
        return Polygon((p, p))
    P = [Point(x, y) for x, y in pts]

    def chain(seq):
        out: list[Point] = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0.0:
                out.pop()
            out.append(p)
        return out

    lower = chain(P)
    upper = chain(reversed(P))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:
        hull = [P[0], P[-1]]
    return Polygon(tuple(hull))


def polygon_area(poly: Polygon) -> float:
    """Shoelace area; non-negative for a counter-clockwise polygon."""
    vs = poly.vertices
    if len(vs) < 3:
        return 0.0
    s = 0.0
    for i in range(len(vs)):
        a, b = vs[i], vs[(i + 1) % len(vs)]
        s += a.x * b.y - b.x * a.y
    return 0.5 * s


def hull_area(points: Iterable) -> float:
    return polygon_area(convex_hull(points))


def regular_polygon(n: int, perimeter: float = 1.0, phase: float = 0.0) -> Polygon:
    """Regular ``n``-gon centred at the origin with the given perimeter.

    Vertex ``k`` sits at angle ``phase + 2*pi*k/n`` on the circumscribed
    circle of radius ``perimeter / (2 n sin(pi/n))``.
    """
    if n < 3:
        raise GeometryError(f"regular polygon needs n >= 3, got {n}")
    if not perimeter > 0:
        raise GeometryError("perimeter must be positive")
    rho = perimeter / (2 * n * math.sin(math.pi / n))
    return circumscribed_polygon(n, rho, phase)


def circumscribed_polygon(n: int, radius: float, phase: float = 0.0) -> Polygon:
    """Regular ``n``-gon with all vertices on the circle of ``radius``."""
    if n < 3:
        raise GeometryError(f"regular polygon needs n >= 3, got {n}")
    ang = phase + 2 * math.pi * np.arange(n) / n
    return Polygon.from_array(np.column_stack((radius * np.cos(ang), radius * np.sin(ang))))


def transform(points: Iterable, translation=(0.0, 0.0), rotation: float = 0.0) -> list[Point]:
    """Rotate about the origin by ``rotation`` then translate."""
    c, s = math.cos(rotation), math.sin(rotation)
    tx, ty = translation
    return [Point(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty) for p in _as_points(points)]


def diameter(points: Sequence) -> float:
    """Largest pairwise distance (brute force over hull vertices)."""
    pts = _as_points(points)
    if len(pts) < 2:
        raise GeometryError("diameter needs at least 2 points")
    xy = convex_hull(pts).as_array()
    diff = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).max())


def contains(poly: Polygon, p: Point) -> float:
    """Smallest signed distance from ``p`` to the polygon's edge lines.

    Non-negative iff ``p`` lies inside or on a convex CCW polygon.
    """
    vs = poly.vertices
    if len(vs) == 2:
        a, b = vs
        dx, dy = b.x - a.x, b.y - a.y
        L2 = dx * dx + dy * dy
        t = 0.0 if L2 == 0 else min(1.0, max(0.0, ((p.x - a.x) * dx + (p.y - a.y) * dy) / L2))
        return -math.hypot(p.x - a.x - t * dx, p.y - a.y - t * dy)
    best = math.inf
    for i in range(len(vs)):
        a, b = vs[i], vs[(i + 1) % len(vs)]
        best = min(best, cross(a, b, p) / math.dist(a, b))
    return best
