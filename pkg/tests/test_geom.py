import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from wormcover.geom import (GeometryError, Point, Polygon, contains, convex_hull, cross, diameter,
                            hull_area, polygon_area, regular_polygon, transform)


def _in_triangle(p, a, b, c):
    d1, d2, d3 = cross(a, b, p), cross(b, c, p), cross(c, a, p)
    neg = d1 < 0 or d2 < 0 or d3 < 0
    pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (neg and pos)


def _on_segment(p, a, b):
    return (cross(a, b, p) == 0 and min(a.x, b.x) <= p.x <= max(a.x, b.x)
            and min(a.y, b.y) <= p.y <= max(a.y, b.y))


def brute_hull(points):
    """Extreme points by exhaustive containment tests, then sorted by angle."""
    pts = sorted(set(points), key=lambda p: (p.x, p.y))
    ext = []
    for p in pts:
        others = [q for q in pts if q != p]
        inside = any(_in_triangle(p, a, b, c) for a, b, c in itertools.combinations(others, 3)
                     if cross(a, b, c) != 0)
        inside = inside or any(_on_segment(p, a, b) for a, b in itertools.combinations(others, 2))
        if not inside:
            ext.append(p)
    cx = sum(p.x for p in ext) / len(ext)
    cy = sum(p.y for p in ext) / len(ext)
    ext.sort(key=lambda p: math.atan2(p.y - cy, p.x - cx))
    area = 0.0
    for i in range(len(ext)):
        a, b = ext[i], ext[(i + 1) % len(ext)]
        area += a.x * b.y - b.x * a.y
    return set(ext), abs(area) / 2


def _cloud(rng, n, grid):
    if grid:
        # small integer grid: plenty of duplicates and collinear triples, exact arithmetic
        return [Point(rng.randint(-4, 4), rng.randint(-4, 4)) for _ in range(n)]
    return [Point(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]


def test_hull_matches_brute_force_oracle():
    rng = random.Random(12345)
    for case in range(1000):
        pts = _cloud(rng, rng.randint(3, 12), grid=case % 2 == 0)
        ext, area = brute_hull(pts)
        hull = convex_hull(pts)
        assert polygon_area(hull) == pytest.approx(area, abs=1e-12)
        if area > 0:
            assert set(hull.vertices) == ext


def test_hull_is_counter_clockwise_and_strictly_convex():
    rng = random.Random(7)
    for _ in range(200):
        hull = convex_hull(_cloud(rng, 12, grid=False))
        vs = hull.vertices
        for i in range(len(vs)):
            assert cross(vs[i], vs[(i + 1) % len(vs)], vs[(i + 2) % len(vs)]) > 0


def test_degenerate_hulls():
    assert convex_hull([(0, 0), (1, 1), (2, 2), (1, 1)]).vertices == (Point(0, 0), Point(2, 2))
    single = convex_hull([(3, 4)])
    assert len(single) == 2 and polygon_area(single) == 0
    with pytest.raises(GeometryError):
        convex_hull([])


def test_unit_square_area_and_perimeter():
    sq = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
    assert polygon_area(sq) == 1.0
    assert sq.perimeter() == 4.0


def test_segment_perimeter_counts_both_sides():
    assert Polygon((Point(0, 0), Point(0.5, 0))).perimeter() == 1.0


def test_regular_polygon():
    for n in (3, 4, 7, 500):
        p = regular_polygon(n)
        assert p.perimeter() == pytest.approx(1.0, abs=1e-12)
        assert len(p) == n
    with pytest.raises(GeometryError):
        regular_polygon(2)
    with pytest.raises(GeometryError):
        regular_polygon(5, perimeter=0)


def test_point_rejects_nan():
    with pytest.raises(GeometryError):
        Point(math.nan, 0)


def test_diameter():
    assert diameter([(0, 0), (3, 4), (1, 1)]) == 5.0
    with pytest.raises(GeometryError):
        diameter([(0, 0)])


def test_contains_signs():
    sq = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert contains(sq, Point(0.5, 0.5)) == pytest.approx(0.5)
    assert contains(sq, Point(2, 0.5)) == pytest.approx(-1.0)
    seg = Polygon((Point(0, 0), Point(1, 0)))
    assert contains(seg, Point(0.5, 0.25)) == pytest.approx(-0.25)


coords = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
clouds = st.lists(st.tuples(coords, coords), min_size=1, max_size=30)


@settings(max_examples=200, deadline=None)
@given(clouds)
def test_hull_contains_every_input_point(pts):
    hull = convex_hull(pts)
    if polygon_area(hull) > 1e-6:
        for p in pts:
            assert contains(hull, Point(*p)) >= -1e-9


@settings(max_examples=200, deadline=None)
@given(clouds)
def test_hull_is_idempotent(pts):
    hull = convex_hull(pts)
    assert convex_hull(hull.vertices).vertices == hull.vertices


@settings(max_examples=200, deadline=None)
@given(clouds, coords, coords, st.floats(-7, 7))
def test_area_invariant_under_rigid_motion(pts, tx, ty, angle):
    a0 = hull_area(pts)
    a1 = hull_area(transform(pts, (tx, ty), angle))
    assert a1 == pytest.approx(a0, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(clouds)
def test_diameter_at_most_half_perimeter(pts):
    assume(len(pts) >= 2)
    hull = convex_hull(pts)
    assert diameter(pts) <= hull.perimeter() / 2 + 1e-9


def test_polygon_from_array_round_trip():
    xy = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    assert np.array_equal(Polygon.from_array(xy).as_array(), xy)
