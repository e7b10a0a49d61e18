"""The certified objective: hull area of circle polygon F, rectangle R, segment L.

F is fixed at the origin; R is axis-aligned with centre (x1, y1); L has centre
(x2, y2) and makes angle theta with the x axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, astuple
from functools import lru_cache

import numpy as np

from . import _kernels
from .geom import GeometryError, Point, Polygon, circumscribed_polygon, hull_area


@dataclass(frozen=True)
class ShapeSpec:
    u: float = 0.1727
    circle_n: int = 500
    circle_perimeter: float = 1.0
    segment_length: float = 0.5

    @property
    def v(self) -> float:
        """Rectangle width; keeps the rectangle perimeter at 1."""
        return 0.5 - self.u

    @property
    def radius(self) -> float:
        """Radius of the circle whose perimeter is ``circle_perimeter``."""
        return self.circle_perimeter / (2 * math.pi)


DEFAULT_SPEC = ShapeSpec()


@dataclass(frozen=True)
class ConfigParams:
    x1: float
    y1: float
    x2: float
    y2: float
    theta: float

    def __post_init__(self):
        if not all(math.isfinite(t) for t in astuple(self)):
            raise ValueError(f"non-finite configuration {astuple(self)}")

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_seq(cls, seq) -> "ConfigParams":
        x1, y1, x2, y2, theta = (float(t) for t in seq)
        return cls(x1, y1, x2, y2, theta)

    def canonical(self) -> "ConfigParams":
        """Map onto the representative with x1, y1 >= 0 and theta in [0, pi).

        Uses the reflections of the plane about the coordinate axes, under which
        the circle polygon and the axis-aligned rectangle are invariant.
        """
        x1, y1, x2, y2, th = astuple(self)
        if y1 < 0:
            y1, y2, th = -y1, -y2, -th
        if x1 < 0:
            x1, x2, th = -x1, -x2, math.pi - th
        th = th % math.pi
        if th >= math.pi:  # a tiny negative angle rounds up to pi
            th = 0.0
        return ConfigParams(x1, y1, x2, y2, th)


@dataclass(frozen=True)
class CircleTables:
    """Numba-ready description of F: vertices, prefix fan sums, radius, phase."""

    vx: np.ndarray
    vy: np.ndarray
    fan: np.ndarray
    radius: float
    phase: float
    sorted_x: np.ndarray
    sorted_y: np.ndarray

    @property
    def area(self) -> float:
        return 0.5 * float(self.fan[-1])


@lru_cache(maxsize=None)
def circle_polygon(spec: ShapeSpec = DEFAULT_SPEC) -> Polygon:
    """Regular ``circle_n``-gon inscribed in the circle of radius r, vertex 0 at (r, 0).

    With an even vertex count the diagonals through vertices 0 and n/2, and n/4
    and 3n/4, lie on the axes, so the rectangle's sides are parallel to longest
    diagonals.
    """
    return circumscribed_polygon(spec.circle_n, spec.radius, 0.0)


@lru_cache(maxsize=None)
def circle_tables(spec: ShapeSpec = DEFAULT_SPEC) -> CircleTables:
    xy = circle_polygon(spec).as_array()
    vx = np.ascontiguousarray(xy[:, 0])
    vy = np.ascontiguousarray(xy[:, 1])
    n = len(vx)
    nxt = np.roll(np.arange(n), -1)
    fan = np.concatenate(([0.0], np.cumsum(vx * vy[nxt] - vx[nxt] * vy)))
    order = np.lexsort((vy, vx))
    for arr in (vx, vy, fan):
        arr.setflags(write=False)
    return CircleTables(vx, vy, fan, spec.radius, 0.0,
                        np.ascontiguousarray(vx[order]), np.ascontiguousarray(vy[order]))


def rectangle_points(p: ConfigParams, spec: ShapeSpec = DEFAULT_SPEC) -> list[Point]:
    """Corners R1 (top-left), R2 (top-right), R3, R4 clockwise from R1."""
    hv, hu = spec.v / 2, spec.u / 2
    return [
        Point(p.x1 - hv, p.y1 + hu),
        Point(p.x1 + hv, p.y1 + hu),
        Point(p.x1 + hv, p.y1 - hu),
        Point(p.x1 - hv, p.y1 - hu),
    ]


def segment_points(p: ConfigParams, spec: ShapeSpec = DEFAULT_SPEC) -> list[Point]:
    """Endpoints L1 (at theta + pi) and L2 (at theta) of the segment."""
    h = spec.segment_length / 2
    return [
        Point(p.x2 + h * math.cos(p.theta + math.pi), p.y2 + h * math.sin(p.theta + math.pi)),
        Point(p.x2 + h * math.cos(p.theta), p.y2 + h * math.sin(p.theta)),
    ]


def kernel_data(spec: ShapeSpec = DEFAULT_SPEC) -> tuple:
    """Argument tuple consumed by ``_kernels.config_area_vec``."""
    t = circle_tables(spec)
    return (t.vx, t.vy, t.fan, t.radius, t.phase, spec.v / 2, spec.u / 2, spec.segment_length / 2)


def objective_f(p, spec: ShapeSpec = DEFAULT_SPEC) -> float:
    """Area of the convex hull of F, R and L for configuration ``p``."""
    if not isinstance(p, ConfigParams):
        p = ConfigParams.from_seq(p)
    t = circle_tables(spec)
    return float(_kernels.config_area(p.x1, p.y1, p.x2, p.y2, p.theta, t.vx, t.vy, t.fan,
                                      t.radius, t.phase, spec.v / 2, spec.u / 2,
                                      spec.segment_length / 2))


def objective_f_many(points, spec: ShapeSpec = DEFAULT_SPEC) -> np.ndarray:
    """``objective_f`` for every row of an (n, 5) array."""
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    if pts.shape[1] != 5:
        raise GeometryError(f"need rows of 5 coordinates, got shape {pts.shape}")
    return _kernels.config_area_rows(pts, kernel_data(spec))


def objective_f_reference(p, spec: ShapeSpec = DEFAULT_SPEC) -> float:
    """Same objective computed with the pure-Python hull over all vertices."""
    if not isinstance(p, ConfigParams):
        p = ConfigParams.from_seq(p)
    pts = list(circle_polygon(spec).vertices) + rectangle_points(p, spec) + segment_points(p, spec)
    return hull_area(pts)


def configuration_points(p: ConfigParams, spec: ShapeSpec = DEFAULT_SPEC) -> list[Point]:
    return list(circle_polygon(spec).vertices) + rectangle_points(p, spec) + segment_points(p, spec)
