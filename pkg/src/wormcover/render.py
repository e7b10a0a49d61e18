"""Deterministic SVG drawing of a configuration and its convex hull."""

from __future__ import annotations

from pathlib import Path

from .bounds import X_EXTENT, Y_EXTENT
from .configuration import (DEFAULT_SPEC, ConfigParams, ShapeSpec, circle_polygon, objective_f,
                            rectangle_points, segment_points)
from .geom import convex_hull

MARGIN = 0.03
PX_PER_UNIT = 1200


def _xy(p) -> str:
    # y is flipped so the drawing has the usual orientation
    return f"{p.x:.6f},{-p.y:.6f}"


def _poly(points, style: str) -> str:
    return f'<polygon points="{" ".join(_xy(p) for p in points)}" {style}/>'


def render_svg(params: ConfigParams, spec: ShapeSpec = DEFAULT_SPEC) -> str:
    """SVG text showing F, R, L, their hull, and the hull area."""
    if not isinstance(params, ConfigParams):
        params = ConfigParams.from_seq(params)
    F = circle_polygon(spec).vertices
    R = rectangle_points(params, spec)
    L = segment_points(params, spec)
    hull = convex_hull(list(F) + R + L)
    area = objective_f(params, spec)

    xs = [p.x for p in hull.vertices]
    ys = [p.y for p in hull.vertices]
    cx, cy = (min(xs) + max(xs)) / 2, (min(ys) + max(ys)) / 2
    w = max(max(xs) - min(xs), X_EXTENT) + 2 * MARGIN
    h = max(max(ys) - min(ys), Y_EXTENT) + 2 * MARGIN
    text_h = 0.06
    x0, y0 = cx - w / 2, -cy - h / 2
    ph = h + text_h

    p = params
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{w * PX_PER_UNIT:.0f}" height="{ph * PX_PER_UNIT:.0f}" '
        f'viewBox="{x0:.6f} {y0:.6f} {w:.6f} {ph:.6f}">',
        f'<rect x="{x0:.6f}" y="{y0:.6f}" width="{w:.6f}" height="{ph:.6f}" fill="white"/>',
        _poly(hull.vertices, 'fill="#e8e8e8" stroke="black" stroke-width="0.0015"'),
        _poly(F, 'fill="none" stroke="#1f5fbf" stroke-width="0.0012"'),
        _poly(R, 'fill="none" stroke="#c0392b" stroke-width="0.0012"'),
        f'<line x1="{L[0].x:.6f}" y1="{-L[0].y:.6f}" x2="{L[1].x:.6f}" y2="{-L[1].y:.6f}" '
        f'stroke="#1e8449" stroke-width="0.002"/>',
        f'<text x="{x0 + MARGIN:.6f}" y="{y0 + h + 0.025:.6f}" font-family="monospace" '
        f'font-size="0.018">area = {area:.10f}</text>',
        f'<text x="{x0 + MARGIN:.6f}" y="{y0 + h + 0.05:.6f}" font-family="monospace" '
        f'font-size="0.012">x1={p.x1:.6f} y1={p.y1:.6f} x2={p.x2:.6f} y2={p.y2:.6f} '
        f'theta={p.theta:.6f}</text>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def render_file(params: ConfigParams, out, spec: ShapeSpec = DEFAULT_SPEC) -> Path:
    out = Path(out)
    out.write_text(render_svg(params, spec))
    return out
