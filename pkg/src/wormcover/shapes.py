"""Maximin search over convex polygons of unit perimeter.

For shapes X1..Xk the inner problem places X2..Xk by rigid motions so that the
hull of the union has the least area (X1 stays put).  The outer problem moves
vertex coordinates to make that least area as large as possible.  Both levels
are heuristic: the inner level is multistart Nelder-Mead, the outer level a
compass pattern search with a halving mesh.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .configuration import DEFAULT_SPEC, circle_polygon, circle_tables
from .geom import GeometryError, Point, Polygon, convex_hull, hull_area, regular_polygon, transform


@dataclass(frozen=True)
class MotionParams:
    """Rigid motion ``p -> R(angle) p + (tx, ty)``."""

    tx: float
    ty: float
    angle: float

    def __post_init__(self):
        if not all(math.isfinite(t) for t in (self.tx, self.ty, self.angle)):
            raise ValueError("motion parameters must be finite")

    def apply(self, poly: Polygon) -> Polygon:
        return Polygon(tuple(transform(poly.vertices, (self.tx, self.ty), self.angle)))


IDENTITY = MotionParams(0.0, 0.0, 0.0)


def normalize_unit_perimeter(poly) -> Polygon:
    """Hull of the input, scaled about the origin to perimeter 1."""
    pts = poly.vertices if isinstance(poly, Polygon) else poly
    hull = convex_hull(pts)
    per = hull.perimeter()
    if not per > 0:
        raise GeometryError("cannot normalize a polygon of zero perimeter")
    k = 1.0 / per
    return Polygon(tuple(Point(p.x * k, p.y * k) for p in hull.vertices))


def unit_segment() -> Polygon:
    """The 2-gon of length 1/2 (perimeter 1 counting both sides)."""
    return Polygon((Point(-0.25, 0.0), Point(0.25, 0.0)))


def pad_vertices(poly: Polygon, n: int) -> Polygon:
    """Repeat the last vertex until there are ``n``; an (n-1)-gon seen as an n-gon."""
    v = list(poly.vertices)
    if len(v) > n:
        raise ValueError(f"polygon already has {len(v)} > {n} vertices")
    v += [v[-1]] * (n - len(v))
    return Polygon(tuple(v))


def scene_area(shapes: Sequence[Polygon], motions: Sequence[MotionParams]) -> float:
    """Hull area with ``motions[j]`` applied to ``shapes[j + 1]``; pure Python."""
    pts = list(shapes[0].vertices)
    for poly, m in zip(shapes[1:], motions):
        pts += m.apply(poly).vertices
    return hull_area(pts)


# ---------------------------------------------------------------------------
# inner problem


def _centroid(poly: Polygon) -> np.ndarray:
    return poly.as_array().mean(axis=0)


class _Inner:
    """Compiled scene for one tuple of shapes.

    Kernel parameters per moving shape are the absolute position of its vertex
    centroid and its rotation about that centroid (or just the position when
    rotation is pinned).
    """

    SPREAD = 0.2
    SCALE_T = 0.05
    SCALE_A = 0.3

    def __init__(self, shapes: Sequence[Polygon], rotate: Optional[Sequence[bool]] = None):
        if not 2 <= len(shapes) <= 3:
            raise ValueError(f"need 2 or 3 shapes, got {len(shapes)}")
        moving = list(shapes[1:])
        rotate = [True] * len(moving) if rotate is None else list(rotate)
        if len(rotate) != len(moving):
            raise ValueError("rotate needs one flag per moving shape")
        self.rotate = rotate
        self.c0 = _centroid(shapes[0])
        self.cents = [_centroid(p) for p in moving]
        mv = [p.as_array() - c for p, c in zip(moving, self.cents)]
        self.moffs = np.cumsum([0] + [len(a) for a in mv]).astype(np.int64)
        mverts = np.ascontiguousarray(np.vstack(mv))
        pidx = np.full((len(moving), 3), -1, dtype=np.int64)
        scale = []
        k = 0
        for j, rot in enumerate(rotate):
            pidx[j, 0], pidx[j, 1] = k, k + 1
            scale += [self.SCALE_T, self.SCALE_T]
            k += 2
            if rot:
                pidx[j, 2] = k
                scale.append(self.SCALE_A)
                k += 1
        self.dim = k
        self.pidx = pidx
        self.scale = np.array(scale)
        circ = circle_polygon(DEFAULT_SPEC)
        if shapes[0] is circ or shapes[0] == circ:
            t = circle_tables(DEFAULT_SPEC)
            self.fun = _kernels.regular_scene_area
            self.data = (t.vx, t.vy, t.fan, t.radius, t.phase, mverts, self.moffs, pidx)
        else:
            xy = shapes[0].as_array()
            order = np.lexsort((xy[:, 1], xy[:, 0]))
            fx = np.ascontiguousarray(xy[order, 0])
            fy = np.ascontiguousarray(xy[order, 1])
            self.fun = _kernels.scene_area
            self.data = (fx, fy, mverts, self.moffs, pidx)

    def relative(self, x: np.ndarray) -> np.ndarray:
        """Kernel parameters with positions taken relative to the fixed centroid."""
        r = x.copy()
        for j in range(len(self.cents)):
            r[self.pidx[j, 0]] -= self.c0[0]
            r[self.pidx[j, 1]] -= self.c0[1]
        return r

    def absolute(self, r: np.ndarray) -> np.ndarray:
        x = np.array(r, dtype=float)
        for j in range(len(self.cents)):
            x[self.pidx[j, 0]] += self.c0[0]
            x[self.pidx[j, 1]] += self.c0[1]
        return x

    def starts(self, n: int, seed: int, extra=None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        rows = [] if extra is None else [np.asarray(e, dtype=float) for e in extra]
        rows.append(np.zeros(self.dim))
        while len(rows) < n + (0 if extra is None else len(extra)):
            r = np.empty(self.dim)
            for j, rot in enumerate(self.rotate):
                r[self.pidx[j, 0]], r[self.pidx[j, 1]] = rng.uniform(-self.SPREAD, self.SPREAD, 2)
                if rot:
                    r[self.pidx[j, 2]] = rng.uniform(0.0, 2.0 * math.pi)
            rows.append(r)
        return np.ascontiguousarray(np.array([self.absolute(r) for r in rows]))

    def solve(self, starts: int, seed: int, extra=None) -> tuple[np.ndarray, float]:
        st = self.starts(max(1, starts), seed, extra)
        xs, vals = _kernels.multistart(self.fun, self.data, st, self.scale, 1e-9, 1e-13, 4000, 4)
        i = int(np.argmin(vals))  # first minimum: deterministic tie-break
        return xs[i], float(vals[i])

    def value(self, x: np.ndarray) -> float:
        return float(self.fun(np.ascontiguousarray(x, dtype=float), self.data))

    def motions(self, x: np.ndarray) -> list[MotionParams]:
        out = []
        for j, c in enumerate(self.cents):
            a = float(x[self.pidx[j, 2]]) if self.pidx[j, 2] >= 0 else 0.0
            ca, sa = math.cos(a), math.sin(a)
            tx = float(x[self.pidx[j, 0]]) - (ca * c[0] - sa * c[1])
            ty = float(x[self.pidx[j, 1]]) - (sa * c[0] + ca * c[1])
            out.append(MotionParams(tx, ty, a))
        return out


def min_over_motions(shapes: Sequence[Polygon], starts: int = 20, seed: int = 0,
                     rotate: Optional[Sequence[bool]] = None) -> tuple[list[MotionParams], float]:
    """Least hull area over rigid motions of ``shapes[1:]``, ``shapes[0]`` fixed.

    ``rotate[j]`` False pins the rotation of ``shapes[j + 1]``.  Returns the
    motions of the best local minimum found and its area.
    """
    inner = _Inner(shapes, rotate)
    x, val = inner.solve(starts, seed)
    return inner.motions(x), val


# ---------------------------------------------------------------------------
# outer problem


@dataclass(frozen=True)
class ShapeProblem:
    """Vertex counts of 2 or 3 shapes; ``fixed_shapes[i]`` set means shape i is
    given rather than optimized.  Shape 0 never moves."""

    vertex_counts: tuple
    fixed_shapes: tuple = ()
    rotate: Optional[tuple] = None

    def __post_init__(self):
        counts = tuple(int(n) for n in self.vertex_counts)
        if not 2 <= len(counts) <= 3:
            raise ValueError(f"need 2 or 3 vertex counts, got {counts}")
        if any(n < 2 for n in counts):
            raise ValueError(f"every vertex count must be >= 2, got {counts}")
        fixed = tuple(self.fixed_shapes) + (None,) * (len(counts) - len(self.fixed_shapes))
        if len(fixed) != len(counts):
            raise ValueError("more fixed shapes than shapes")
        for n, f in zip(counts, fixed):
            if f is not None and len(f) != n:
                raise ValueError(f"fixed shape has {len(f)} vertices, count says {n}")
        object.__setattr__(self, "vertex_counts", counts)
        object.__setattr__(self, "fixed_shapes", fixed)

    @property
    def free(self) -> list[int]:
        return [i for i, f in enumerate(self.fixed_shapes) if f is None]


@dataclass
class ShapeSearchOptions:
    starts: int = 12
    verify_starts: int = 40
    seed: int = 0
    mesh_start: float = 0.02
    mesh_min: float = 1e-4
    max_evals: int = 5000
    max_seconds: Optional[float] = None
    # smallest gain that counts as an improvement of the outer objective
    improve_tol: float = 1e-7
    # amplitude of the seeded perturbation applied to regular starting shapes
    init_noise: float = 0.01


@dataclass
class EvalRecord:
    index: int
    mesh: float
    value: float
    accepted: bool


@dataclass
class ShapeSearchResult:
    shapes: list
    value: float
    motions: list
    evaluations: int
    wall_time: float
    log: list = field(default_factory=list)

    def __iter__(self):
        yield self.shapes
        yield self.value


def initial_shapes(problem: ShapeProblem, seed: int = 0, noise: float = 0.01) -> list[Polygon]:
    """Regular unit-perimeter polygons with a small seeded vertex jitter."""
    rng = np.random.default_rng(seed)
    out = []
    for n, f in zip(problem.vertex_counts, problem.fixed_shapes):
        if f is not None:
            out.append(f)
            continue
        base = unit_segment() if n == 2 else regular_polygon(n, 1.0, math.pi / 2)
        xy = base.as_array() + rng.uniform(-noise, noise, (n, 2))
        out.append(Polygon.from_array(xy))
    return out


class _Outer:
    def __init__(self, problem: ShapeProblem, opts: ShapeSearchOptions, start: list[Polygon]):
        self.problem = problem
        self.opts = opts
        self.start = start
        self.free = problem.free
        self.sizes = [len(start[i]) for i in self.free]

    def pack(self, shapes) -> np.ndarray:
        if not self.free:
            return np.zeros(0)
        return np.concatenate([shapes[i].as_array().ravel() for i in self.free])

    def unpack(self, x: np.ndarray) -> list[Polygon]:
        shapes = list(self.start)
        k = 0
        for i, n in zip(self.free, self.sizes):
            shapes[i] = normalize_unit_perimeter(
                [Point(float(a), float(b)) for a, b in x[k:k + 2 * n].reshape(n, 2)])
            k += 2 * n
        return shapes

    def evaluate(self, x, starts, seed, warm=None):
        """(value, relative motion vector, shapes) or -inf for unusable shapes."""
        try:
            shapes = self.unpack(x)
        except GeometryError:
            return -math.inf, None, None
        inner = _Inner(shapes, self.problem.rotate)
        extra = None
        if warm is not None:
            extra = [w for w in warm if w is not None and len(w) == inner.dim]
        xm, val = inner.solve(starts, seed, extra)
        return val, inner.relative(xm), shapes


def max_over_shapes(problem: ShapeProblem, opts: Optional[ShapeSearchOptions] = None,
                    start: Optional[Sequence[Polygon]] = None) -> ShapeSearchResult:
    """Pattern-search ascent of the inner minimum over vertex coordinates.

    Trial points that look better are re-solved with ``verify_starts`` fresh
    starts and accepted only if the larger solve agrees, which keeps the ascent
    from exploiting inner solves that missed the true minimum.
    """
    opts = opts or ShapeSearchOptions()
    t0 = time.perf_counter()
    start = list(start) if start is not None else initial_shapes(problem, opts.seed, opts.init_noise)
    if len(start) != len(problem.vertex_counts):
        raise ValueError("start must give one polygon per shape")
    outer = _Outer(problem, opts, start)
    x = outer.pack(start)
    fx, mx, shapes = outer.evaluate(x, opts.verify_starts, opts.seed)
    if shapes is None:
        raise GeometryError("starting shapes are degenerate")
    log = [EvalRecord(0, opts.mesh_start, fx, True)]
    evals = 1
    mesh = opts.mesh_start

    def out_of_budget():
        if evals >= opts.max_evals:
            return True
        return opts.max_seconds is not None and time.perf_counter() - t0 > opts.max_seconds

    while x.size and mesh >= opts.mesh_min and not out_of_budget():
        improved = False
        for i in range(x.size):
            for sgn in (1.0, -1.0):
                if out_of_budget():
                    break
                y = x.copy()
                y[i] += sgn * mesh
                fy, my, sy = outer.evaluate(y, opts.starts, opts.seed, [mx])
                evals += 1
                ok = False
                if fy > fx + opts.improve_tol:
                    fv, mv, _ = outer.evaluate(y, opts.verify_starts, opts.seed + 1, [my, mx])
                    evals += 1
                    if fv < fy:
                        fy, my = fv, mv
                    ok = fy > fx + opts.improve_tol
                log.append(EvalRecord(evals, mesh, fy, ok))
                if ok:
                    x, fx, mx, shapes = y, fy, my, sy
                    improved = True
                    break
        if not improved:
            mesh *= 0.5

    # final value: the least of every solve made at the returned shapes
    inner = _Inner(shapes, problem.rotate)
    xm, val = inner.solve(opts.verify_starts, opts.seed + 2, [mx])
    xbest = inner.absolute(mx)
    if inner.value(xbest) <= val:
        val, xm = inner.value(xbest), xbest
    value = min(fx, val)
    evals += 1
    return ShapeSearchResult(shapes, value, inner.motions(xm), evals,
                             time.perf_counter() - t0, log)


def fixed_two_search(ngon: int, opts: Optional[ShapeSearchOptions] = None,
                     seed_shape: Optional[Polygon] = None) -> ShapeSearchResult:
    """Circle polygon and half-unit segment given; optimize one ``ngon``-gon.

    The circle polygon is (up to its tiny angular step) invariant under
    rotation, so the polygon's rotation is pinned and only the segment turns.
    """
    if ngon < 3:
        raise ValueError(f"ngon must be >= 3, got {ngon}")
    opts = opts or ShapeSearchOptions()
    circ = circle_polygon(DEFAULT_SPEC)
    seg = unit_segment()
    problem = ShapeProblem((len(circ), 2, ngon), (circ, seg, None), rotate=(True, False))
    start = None
    if seed_shape is not None:
        start = [circ, seg, pad_vertices(seed_shape, ngon)]
    return max_over_shapes(problem, opts, start)


# ---------------------------------------------------------------------------
# experiment files


class SpecFileError(ValueError):
    pass


INT_KEYS = {"starts", "verify_starts", "seed", "max_evals", "ngon"}
FLOAT_KEYS = {"mesh_start", "mesh_min", "max_seconds", "improve_tol", "init_noise"}


@dataclass
class ExperimentCase:
    name: str
    problem: Optional[ShapeProblem]
    ngon: Optional[int]
    opts: ShapeSearchOptions
    line: int
    # option names set explicitly on the line
    explicit: frozenset = frozenset()


def parse_experiment(text: str, source: str = "<spec>") -> list[ExperimentCase]:
    """One case per line of ``key=value`` tokens; ``#`` starts a comment.

    ``counts=2,3`` runs a free search; ``fixed=circle,line ngon=4`` runs the
    fixed circle-and-segment search.  Budget keys override the defaults.
    """
    cases = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        kv = {}
        for tok in line.split():
            key, eq, val = tok.partition("=")
            if not eq or not key or not val:
                raise SpecFileError(f"{where}: expected key=value, got {tok!r}")
            if key in kv:
                raise SpecFileError(f"{where}: duplicate key {key!r}")
            kv[key] = val
        opts = ShapeSearchOptions()
        name = kv.pop("name", None)
        counts = kv.pop("counts", None)
        fixed = kv.pop("fixed", None)
        ngon = None
        for key, val in kv.items():
            try:
                if key in INT_KEYS:
                    num = int(val)
                elif key in FLOAT_KEYS:
                    num = float(val)
                else:
                    raise SpecFileError(f"{where}: unknown key {key!r}")
            except ValueError:
                raise SpecFileError(f"{where}: bad value for {key}: {val!r}") from None
            if key == "ngon":
                ngon = num
            else:
                setattr(opts, key, num)
        if (counts is None) == (fixed is None):
            raise SpecFileError(f"{where}: give exactly one of counts=... or fixed=...")
        problem = None
        if counts is not None:
            if ngon is not None:
                raise SpecFileError(f"{where}: ngon only applies to fixed=circle,line")
            try:
                problem = ShapeProblem(tuple(int(t) for t in counts.split(",")))
            except ValueError as exc:
                raise SpecFileError(f"{where}: {exc}") from None
            name = name or "+".join(counts.split(","))
        else:
            if fixed != "circle,line":
                raise SpecFileError(f"{where}: only fixed=circle,line is supported, got {fixed!r}")
            if ngon is None or ngon < 3:
                raise SpecFileError(f"{where}: fixed=circle,line needs ngon >= 3")
            name = name or f"circle+line+{ngon}"
        cases.append(ExperimentCase(name, problem, ngon, opts, lineno, frozenset(kv)))
    if not cases:
        raise SpecFileError(f"{source}: experiment file has no cases")
    return cases


def run_case(case: ExperimentCase) -> ShapeSearchResult:
    if case.problem is not None:
        return max_over_shapes(case.problem, case.opts)
    return fixed_two_search(case.ngon, case.opts)


def write_results(path, rows: Sequence[tuple[str, ShapeSearchResult]]) -> tuple[Path, Path]:
    """Results CSV plus a sibling ``.shapes.csv`` with every vertex."""
    path = Path(path)
    dump = path.with_name(path.stem + ".shapes.csv")
    with open(path, "w") as fh:
        fh.write("case,best_value,wall_time\n")
        for name, res in rows:
            fh.write(f"{name},{res.value!r},{res.wall_time:.3f}\n")
    with open(dump, "w") as fh:
        fh.write("case,shape,vertex,x,y\n")
        for name, res in rows:
            placed = [res.shapes[0]] + [m.apply(s) for s, m in zip(res.shapes[1:], res.motions)]
            for i, poly in enumerate(placed):
                if len(poly) > 50:
                    continue  # the circle polygon is implied
                for k, p in enumerate(poly.vertices):
                    fh.write(f"{name},{i},{k},{p.x!r},{p.y!r}\n")
    return path, dump
