"""Machine checks of the geometric facts the certificate rests on.

* domain reduction: outside the box ``Z`` the hull area already exceeds 0.1;
* the 0.439 x 0.636 bounding-rectangle argument;
* the diameter bound for F united with R;
* the Lipschitz constants of the objective on ``Z``, both their derivation
  inequalities and an empirical finite-difference cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, astuple

import numpy as np
from numba import njit

from . import _kernels
from .configuration import (DEFAULT_SPEC, ConfigParams, ShapeSpec, circle_polygon, circle_tables,
                            kernel_data, rectangle_points)
from .geom import GeometryError, diameter, hull_area

THRESHOLD = 0.1
DEFAULT_EPS = 1e-6

# Sides of the rectangle that contains every configuration not already above 0.1.
Y_EXTENT = 0.439
X_EXTENT = 0.636
# Reach in |x| of the rectangle and of the segment inside Z.
RECT_X_REACH = 0.2378
LINE_X_REACH = 0.398
DIAMETER_BOUND = 0.45976
R2R4_BOUND = 0.37007


@dataclass(frozen=True)
class DomainZ:
    x1: tuple[float, float] = (0.0, 0.0741)
    y1: tuple[float, float] = (0.0, 0.0976)
    x2: tuple[float, float] = (-0.148, 0.148)
    y2: tuple[float, float] = (-0.148, 0.148)
    theta: tuple[float, float] = (0.0, math.pi)

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return [self.x1, self.y1, self.x2, self.y2, self.theta]

    @property
    def lo(self) -> np.ndarray:
        return np.array([a for a, _ in self.intervals])

    @property
    def hi(self) -> np.ndarray:
        return np.array([b for _, b in self.intervals])

    def volume(self) -> float:
        return math.prod(b - a for a, b in self.intervals)

    def center(self) -> ConfigParams:
        return ConfigParams.from_seq((self.lo + self.hi) / 2)


DEFAULT_DOMAIN = DomainZ()


@dataclass(frozen=True)
class LipschitzConstants:
    c1: float = 0.306
    c2: float = 0.443
    c3: float = 0.392
    c4: float = 0.449
    c5: float = 0.115

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


DEFAULT_CONSTANTS = LipschitzConstants()


@dataclass
class Check:
    name: str
    value: float
    bound: float
    # "gt": value must exceed bound by more than eps; "lt": stay below it by
    # more than eps; "le": may touch it
    sense: str = "gt"
    eps: float = 0.0
    note: str = ""

    @property
    def margin(self) -> float:
        return self.value - self.bound if self.sense == "gt" else self.bound - self.value

    @property
    def passed(self) -> bool:
        if self.sense == "le":
            return self.margin >= 0.0
        return self.margin > self.eps

    def line(self) -> str:
        rel = {"gt": ">", "lt": "<", "le": "<="}[self.sense]
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: {self.value:.9g} {rel} {self.bound:.9g} "
                f"(margin {self.margin:.3e}){'  ' + self.note if self.note else ''}")


@dataclass
class Report:
    """Named pass/fail checks with a text and a key=value rendering."""

    title: str
    checks: list[Check] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "Report") -> "Report":
        self.checks.extend(other.checks)
        self.warnings.extend(other.warnings)
        return self

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_text(self) -> str:
        lines = [f"== {self.title} =="]
        lines += [c.line() for c in self.checks]
        lines += [f"[WARN] {w}" for w in self.warnings]
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'} ({len(self.checks)} checks)")
        return "\n".join(lines)

    def to_kv(self) -> list[str]:
        out = []
        for c in self.checks:
            out.append(f"{c.name}.value={c.value!r}")
            out.append(f"{c.name}.margin={c.margin!r}")
            out.append(f"{c.name}.passed={int(c.passed)}")
        out.append(f"{self.title.lower().replace(' ', '_')}.passed={int(self.passed)}")
        return out



@dataclass
class ValidationReport(Report):
    max_slopes: list[float] = field(default_factory=list)
    samples: int = 0
    step: float = 0.0


class CertificateError(RuntimeError):
    """A preflight inequality the certificate relies on does not hold."""


def psi(x1: float, y1: float, spec: ShapeSpec = DEFAULT_SPEC) -> float:
    """Hull area of F and the rectangle centred at (x1, y1)."""
    t = circle_tables(spec)
    hv, hu = spec.v / 2, spec.u / 2
    qx = np.array([x1 - hv, x1 + hv, x1 + hv, x1 - hv])
    qy = np.array([y1 + hu, y1 + hu, y1 - hu, y1 - hu])
    return float(_kernels.regular_hull_area(qx, qy, t.vx, t.vy, t.fan, t.radius, t.phase))


def psi_reference(x1: float, y1: float, spec: ShapeSpec = DEFAULT_SPEC) -> float:
    p = ConfigParams(x1, y1, 0.0, 0.0, 0.0)
    return hull_area(list(circle_polygon(spec).vertices) + rectangle_points(p, spec))


def trapezoid_bound(dist: float, spec: ShapeSpec = DEFAULT_SPEC) -> float:
    """Lower bound on the hull area once the segment centre is ``dist`` from C0.

    Trapezoid between the segment and the perpendicular chord of F through the
    circle centre, plus the half of F on the far side.
    """
    if dist < 0:
        raise GeometryError(f"distance must be non-negative, got {dist}")
    n = spec.circle_n
    r = spec.radius
    chord = 2 * r * math.cos(math.pi / n)
    return 0.5 * (spec.segment_length + chord) * dist + circle_tables(spec).area / 2


def y_extent_bound(extent: float, spec: ShapeSpec = DEFAULT_SPEC) -> float:
    """Lower bound on the hull area when the configuration spans ``extent`` in y."""
    u = spec.u
    if extent < u:
        raise GeometryError(f"extent {extent} is below the rectangle height {u}")
    return u * (0.5 - u) + 0.5 * (0.5 - u) * (extent - u)


def check_domain_reduction(spec: ShapeSpec = DEFAULT_SPEC, domain: DomainZ = DEFAULT_DOMAIN,
                           eps: float = DEFAULT_EPS, threshold: float = THRESHOLD) -> Report:
    rep = Report("domain reduction")
    x1max, y1max = domain.x1[1], domain.y1[1]
    dmax = domain.x2[1]
    rep.add(Check("psi_x1_edge", psi(x1max, 0.0, spec), threshold, eps=eps,
                  note=f"psi({x1max}, 0)"))
    rep.add(Check("psi_y1_edge", psi(0.0, y1max, spec), threshold, eps=eps,
                  note=f"psi(0, {y1max})"))
    rep.add(Check("segment_trapezoid", trapezoid_bound(dmax, spec), threshold, eps=eps,
                  note=f"segment centre at distance {dmax}"))
    rep.add(Check("y_extent", y_extent_bound(Y_EXTENT, spec), threshold, eps=eps,
                  note=f"height {Y_EXTENT}"))
    rep.add(Check("rect_x_reach", x1max + spec.v / 2, RECT_X_REACH, sense="lt"))
    line_reach = domain.x2[1] + spec.segment_length / 2
    rep.add(Check("line_x_reach", line_reach, LINE_X_REACH, sense="le",
                  note="attained on the boundary of Z"))
    rep.add(Check("x_extent", LINE_X_REACH + RECT_X_REACH, X_EXTENT, sense="lt", eps=eps))
    rep.add(Check("x_extent_line_only", spec.segment_length, X_EXTENT, sense="lt", eps=eps))
    return rep


@njit(cache=True)
def _segment_boundary_min(side, ncells_s, ncells_t, half_len, vx, vy, fan, radius, phase):
    """Least circle+segment hull area at the centres of a grid over the square
    boundary (arc-length parameter) times [0, pi)."""
    total = 8.0 * side
    ds = total / ncells_s
    dt = math.pi / ncells_t
    qx = np.empty(2)
    qy = np.empty(2)
    best = np.inf
    for i in range(ncells_s):
        s = (i + 0.5) * ds
        # walk the boundary of [-side, side]^2 counter-clockwise from (side, -side)
        e = int(s // (2.0 * side))
        w = s - 2.0 * side * e
        if e == 0:
            x, y = side, -side + w
        elif e == 1:
            x, y = side - w, side
        elif e == 2:
            x, y = -side, side - w
        else:
            x, y = -side + w, -side
        for j in range(ncells_t):
            th = (j + 0.5) * dt
            c = half_len * math.cos(th)
            sn = half_len * math.sin(th)
            qx[0] = x - c
            qy[0] = y - sn
            qx[1] = x + c
            qy[1] = y + sn
            a = _kernels.regular_hull_area(qx, qy, vx, vy, fan, radius, phase)
            if a < best:
                best = a
    return best


def segment_region_bound(spec: ShapeSpec = DEFAULT_SPEC, domain: DomainZ = DEFAULT_DOMAIN,
                         cells_s: int = 1200, cells_theta: int = 600) -> tuple[float, float]:
    """Certified lower bound on the circle+segment hull area when the segment
    centre lies outside the square ``|x2|, |y2| <= side``.

    For fixed theta the area is convex in the segment centre (Fary-Redei) and
    even, because both shapes are centrally symmetric, so along every ray from
    the origin it is non-decreasing and its minimum outside the square sits on
    the square's boundary.  Moving every point of the segment by at most h
    grows or shrinks the hull by at most P h + pi h^2 (Steiner), with P the
    perimeter of a disc containing the hull.  Returns ``(bound, grid_min)``.
    """
    side = min(domain.x2[1], -domain.x2[0], domain.y2[1], -domain.y2[0])
    half_len = spec.segment_length / 2
    t = circle_tables(spec)
    grid_min = float(_segment_boundary_min(side, cells_s, cells_theta, half_len,
                                           t.vx, t.vy, t.fan, t.radius, t.phase))
    hs = 8.0 * side / cells_s / 2
    ht = math.pi / cells_theta / 2
    h = hs + half_len * ht
    rho = max(spec.radius, side * math.sqrt(2) + half_len)
    per = 2 * math.pi * rho
    return grid_min - (per * h + math.pi * h * h), grid_min


def check_segment_region(spec: ShapeSpec = DEFAULT_SPEC, domain: DomainZ = DEFAULT_DOMAIN,
                         eps: float = DEFAULT_EPS, threshold: float = THRESHOLD) -> Report:
    rep = Report("segment region")
    bound, grid_min = segment_region_bound(spec, domain)
    rep.add(Check("segment_outside_square", bound, threshold, eps=eps,
                  note=f"grid minimum {grid_min:.6f} minus Lipschitz allowance"))
    return rep


def r2r4_length(spec: ShapeSpec = DEFAULT_SPEC) -> float:
    """Diagonal of the rectangle."""
    return math.hypot(spec.u, spec.v)


def diameter_fr_bound(spec: ShapeSpec = DEFAULT_SPEC, domain: DomainZ = DEFAULT_DOMAIN,
                      strict: bool = True) -> float:
    """Largest diameter of F united with R over the (x1, y1) range of ``domain``.

    Each F-vertex to rectangle-corner distance is convex in the rectangle centre
    and the R-R distances are constant, so the maximum over the box sits at one
    of its four corners.
    """
    F = list(circle_polygon(spec).vertices)
    best = 0.0
    for x1 in domain.x1:
        for y1 in domain.y1:
            R = rectangle_points(ConfigParams(x1, y1, 0.0, 0.0, 0.0), spec)
            best = max(best, diameter(F + R))
    if strict:
        if not best < DIAMETER_BOUND:
            raise CertificateError(f"diameter {best} is not below {DIAMETER_BOUND}")
        if not r2r4_length(spec) < R2R4_BOUND:
            raise CertificateError(f"|R2R4| = {r2r4_length(spec)} is not below {R2R4_BOUND}")
    return best


def check_diameter(spec: ShapeSpec = DEFAULT_SPEC, domain: DomainZ = DEFAULT_DOMAIN) -> Report:
    rep = Report("diameter")
    rep.add(Check("diameter_FR", diameter_fr_bound(spec, domain, strict=False), DIAMETER_BOUND,
                  sense="lt"))
    rep.add(Check("R2R4", r2r4_length(spec), R2R4_BOUND, sense="lt"))
    return rep


def lipschitz_derivations(spec: ShapeSpec = DEFAULT_SPEC, domain: DomainZ = DEFAULT_DOMAIN,
                          consts: LipschitzConstants = DEFAULT_CONSTANTS) -> Report:
    """The five inequalities bounding the asymptotic slopes of f by c1..c5."""
    u, v, r = spec.u, spec.v, spec.radius
    half_len = spec.segment_length / 2
    x1max, y1max, x2max = domain.x1[1], domain.y1[1], max(abs(t) for t in domain.x2)
    exprs = [
        (Y_EXTENT + u) / 2,
        (v + (x2max + half_len + r)) / 2,
        (Y_EXTENT + (y1max + u / 2 + r)) / 2,
        (spec.segment_length + (x1max + v / 2 + r)) / 2,
        DIAMETER_BOUND * half_len,
    ]
    rep = Report("lipschitz derivations")
    for i, (e, c) in enumerate(zip(exprs, consts.as_array()), start=1):
        rep.add(Check(f"C{i}_derivation", e, float(c), sense="lt"))
    return rep


def lipschitz_constants(spec: ShapeSpec = DEFAULT_SPEC, domain: DomainZ = DEFAULT_DOMAIN,
                        consts: LipschitzConstants = DEFAULT_CONSTANTS) -> LipschitzConstants:
    rep = lipschitz_derivations(spec, domain, consts)
    if not rep.passed:
        raise CertificateError("Lipschitz derivation fails: " + ", ".join(rep.failed()))
    return consts


@njit(cache=True)
def _slopes(points, step, data):
    n = points.shape[0]
    out = np.empty((n, 5))
    q = np.empty(5)
    for i in range(n):
        base = _kernels.config_area_vec(points[i], data)
        for k in range(5):
            q[:] = points[i]
            q[k] += step
            out[i, k] = abs(_kernels.config_area_vec(q, data) - base) / step
    return out


def sample_domain(samples: int, seed: int = 0, domain: DomainZ = DEFAULT_DOMAIN) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(domain.lo, domain.hi, size=(samples, 5))


def vertical_extent(points: np.ndarray, spec: ShapeSpec = DEFAULT_SPEC) -> np.ndarray:
    """Height of the bounding box of F, R and L for each row of ``points``."""
    p = np.atleast_2d(points)
    r, hu, h = spec.radius, spec.u / 2, spec.segment_length / 2
    ls = h * np.abs(np.sin(p[:, 4]))
    top = np.maximum.reduce([np.full(len(p), r), p[:, 1] + hu, p[:, 3] + ls])
    bot = np.minimum.reduce([np.full(len(p), -r), p[:, 1] - hu, p[:, 3] - ls])
    return top - bot


def sample_bounded_extent(samples: int, seed: int = 0, domain: DomainZ = DEFAULT_DOMAIN,
                          spec: ShapeSpec = DEFAULT_SPEC, extent: float = Y_EXTENT) -> np.ndarray:
    """Seeded points of Z whose configuration is at most ``extent`` tall.

    Outside this set the y-extent bound already puts f above 0.1, and it is the
    set on which the x1 and x2 slope bounds are derived.
    """
    rng = np.random.default_rng(seed)
    out = []
    have = 0
    while have < samples:
        cand = rng.uniform(domain.lo, domain.hi, size=(max(4 * samples, 64), 5))
        cand = cand[vertical_extent(cand, spec) <= extent]
        out.append(cand)
        have += len(cand)
    return np.concatenate(out)[:samples]


def directional_slopes(points: np.ndarray, step: float, spec: ShapeSpec = DEFAULT_SPEC) -> np.ndarray:
    return _slopes(np.ascontiguousarray(points, dtype=float), float(step), kernel_data(spec))


def validate_lipschitz(samples: int = 10_000, step: float = 1e-4, seed: int = 0,
                       spec: ShapeSpec = DEFAULT_SPEC, domain: DomainZ = DEFAULT_DOMAIN,
                       consts: LipschitzConstants = DEFAULT_CONSTANTS,
                       tol: float = 1e-6, bounded_extent: bool = False) -> ValidationReport:
    """Largest forward-difference slope of f per coordinate over seeded points of Z.

    With ``bounded_extent`` the points are drawn only from configurations at
    most 0.439 tall.  Over all of Z the x1 and x2 slopes exceed c1 and c3 for
    near-vertical segments (the F+L height reaches about 0.557 there).
    """
    if not step > 0:
        raise GeometryError(f"step must be positive, got {step}")
    title = "lipschitz sampling" + (" (height <= %g)" % Y_EXTENT if bounded_extent else "")
    rep = ValidationReport(title, samples=samples, step=step)
    if samples < 1:
        rep.warnings.append("Lipschitz sampling skipped: no samples requested")
        return rep
    if bounded_extent:
        pts = sample_bounded_extent(samples, seed, domain, spec)
    else:
        pts = sample_domain(samples, seed, domain)
    slopes = directional_slopes(pts, step, spec)
    rep.max_slopes = [float(s) for s in slopes.max(axis=0)]
    tag = "bounded" if bounded_extent else "sampled"
    for i, (s, c) in enumerate(zip(rep.max_slopes, consts.as_array()), start=1):
        rep.add(Check(f"C{i}_{tag}", s, float(c) + tol, sense="lt",
                      note=f"max |df/dz{i}| over {samples} points"))
    return rep
