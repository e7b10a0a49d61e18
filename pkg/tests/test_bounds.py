import math

import numpy as np
import pytest

from wormcover.bounds import (DEFAULT_CONSTANTS, DEFAULT_DOMAIN, CertificateError, DomainZ,
                              LipschitzConstants, check_diameter, check_domain_reduction,
                              check_segment_region, segment_region_bound,
                              diameter_fr_bound, lipschitz_constants, lipschitz_derivations, psi,
                              psi_reference, r2r4_length, sample_bounded_extent, sample_domain,
                              trapezoid_bound, validate_lipschitz, vertical_extent, y_extent_bound)
from wormcover.configuration import objective_f, objective_f_reference
from wormcover.geom import GeometryError


def test_domain_volume():
    assert DEFAULT_DOMAIN.volume() == pytest.approx(0.0741 * 0.0976 * 0.296 ** 2 * math.pi, rel=1e-15)
    assert DEFAULT_DOMAIN.volume() == pytest.approx(0.001990679394, abs=1e-9)


def test_psi_edges_exceed_threshold():
    assert psi(0.0741, 0.0) > 0.1
    assert psi(0.0, 0.0976) > 0.1
    assert psi(0.0741, 0.0) == pytest.approx(psi_reference(0.0741, 0.0), abs=1e-13)
    assert psi(0.0, 0.0976) == pytest.approx(psi_reference(0.0, 0.0976), abs=1e-13)


def test_psi_lower_bounds_f():
    # adding the segment can only grow the hull
    for z in sample_domain(200, seed=2):
        assert psi(z[0], z[1]) <= objective_f(z) + 1e-15


def test_trapezoid_and_height_bounds():
    assert trapezoid_bound(0.148) > 0.1
    assert y_extent_bound(0.439) > 0.1
    with pytest.raises(GeometryError):
        trapezoid_bound(-0.1)
    with pytest.raises(GeometryError):
        y_extent_bound(0.1)


def _line_distance(p):
    # distance from the circle centre to the line carrying the segment
    x2, y2, th = p[2], p[3], p[4]
    return abs(-math.sin(th) * x2 + math.cos(th) * y2)


def test_trapezoid_bound_holds_in_line_distance():
    rng = np.random.default_rng(1)
    for _ in range(300):
        d = rng.uniform(0.0, 0.3)
        ang = rng.uniform(0, 2 * math.pi)
        p = (0.0, 0.0, d * math.cos(ang), d * math.sin(ang), rng.uniform(0, math.pi))
        assert psi(0.0, 0.0) <= objective_f(p) + 1e-15
        assert objective_f_reference(p) >= trapezoid_bound(_line_distance(p)) - 1e-12


def test_trapezoid_bound_in_centre_distance_can_fail():
    # oblique segment: centre 0.226 away, hull smaller than the formula at 0.226
    p = (0.0, 0.0, 0.21494797796463677, -0.06914912094328987, 0.45289078026435103)
    d = math.hypot(p[2], p[3])
    assert objective_f_reference(p) < trapezoid_bound(d)
    assert objective_f_reference(p) > 0.1


def test_segment_region_bound():
    bound, grid_min = segment_region_bound()
    assert 0.1 < bound < grid_min
    assert grid_min == pytest.approx(0.105178, abs=1e-5)
    assert check_segment_region().passed
    # spot points outside the square never undercut the grid minimum by more than the allowance
    rng = np.random.default_rng(8)
    for _ in range(300):
        x2, y2 = rng.uniform(-0.4, 0.4, 2)
        if max(abs(x2), abs(y2)) < 0.148:
            continue
        assert objective_f((0.0, 0.0, x2, y2, rng.uniform(0, math.pi))) >= bound


def test_domain_reduction_report():
    rep = check_domain_reduction()
    assert rep.passed, rep.to_text()
    assert len(rep.checks) == 8
    assert min(c.margin for c in rep.checks if c.sense == "gt") > 0


def test_domain_reduction_fails_with_large_eps():
    rep = check_domain_reduction(eps=0.05)
    assert not rep.passed
    assert "psi_x1_edge" in rep.failed() and "psi_y1_edge" in rep.failed()


def test_diameter_claim():
    d = diameter_fr_bound()
    assert 0.4590 < d < 0.45976
    assert r2r4_length() < 0.37007
    assert check_diameter().passed


def test_diameter_strict_mode_raises_on_wider_domain():
    wide = DomainZ(x1=(0.0, 0.2), y1=(0.0, 0.2))
    with pytest.raises(CertificateError):
        diameter_fr_bound(domain=wide)


def test_lipschitz_derivations():
    rep = lipschitz_derivations()
    assert rep.passed, rep.to_text()
    vals = [c.value for c in rep.checks]
    assert vals[0] == pytest.approx(0.30585, abs=1e-12)
    assert vals[4] == pytest.approx(0.11494, abs=1e-12)
    assert lipschitz_constants() == DEFAULT_CONSTANTS


def test_lipschitz_constants_raise_when_too_small():
    with pytest.raises(CertificateError):
        lipschitz_constants(consts=LipschitzConstants(0.3, 0.443, 0.392, 0.449, 0.115))


def test_sampling_is_seeded_and_in_domain():
    a = sample_domain(100, seed=5)
    assert np.array_equal(a, sample_domain(100, seed=5))
    assert np.all(a >= DEFAULT_DOMAIN.lo) and np.all(a <= DEFAULT_DOMAIN.hi)
    b = sample_bounded_extent(100, seed=5)
    assert np.all(vertical_extent(b) <= 0.439)


def test_bounded_extent_validation_passes():
    rep = validate_lipschitz(2000, seed=1, bounded_extent=True)
    assert rep.passed, rep.to_text()
    assert len(rep.max_slopes) == 5


def test_validation_with_zero_samples_warns():
    rep = validate_lipschitz(0)
    assert rep.checks == [] and rep.warnings
    with pytest.raises(GeometryError):
        validate_lipschitz(10, step=0.0)


def test_tall_configurations_exceed_c1():
    # a near-vertical segment at the top of Z makes the hull 0.557 tall
    z = np.array([0.03, 0.0, 0.0, 0.148, math.pi / 2])
    h = 1e-5
    dz = z.copy()
    dz[0] += h
    slope = abs(objective_f_reference(dz) - objective_f_reference(z)) / h
    assert slope > DEFAULT_CONSTANTS.c1
