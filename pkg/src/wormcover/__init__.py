"""Computer-assisted lower bound for convex covers of a circle, a rectangle and a segment.

The minimum area of the convex hull of a unit-perimeter circle (a 500-gon), a
0.1727 x 0.3273 rectangle and a segment of length 1/2, over rigid placements, is
certified to exceed 0.1 by a Lipschitz branch-and-bound search.
"""

from .bounds import (DEFAULT_CONSTANTS, DEFAULT_DOMAIN, DomainZ, LipschitzConstants, Report,
                     check_diameter, check_domain_reduction, check_segment_region,
                     lipschitz_constants, lipschitz_derivations, psi, trapezoid_bound,
                     validate_lipschitz, y_extent_bound)
from .boxsearch import Box5, SearchOptions, SearchResult, margin, run_search, split
from .checkpoint import CheckpointError, checkpoint_load, checkpoint_save
from .configuration import (DEFAULT_SPEC, ConfigParams, ShapeSpec, objective_f, objective_f_many,
                            objective_f_reference)
from .geom import GeometryError, Point, Polygon, convex_hull, hull_area, polygon_area
from .shapes import (MotionParams, ShapeProblem, ShapeSearchOptions, fixed_two_search,
                     max_over_shapes, min_over_motions, normalize_unit_perimeter)

__version__ = "0.1.0"

__all__ = [
    "Box5", "CheckpointError", "ConfigParams", "DEFAULT_CONSTANTS", "DEFAULT_DOMAIN",
    "DEFAULT_SPEC", "DomainZ", "GeometryError", "LipschitzConstants", "MotionParams", "Point",
    "Polygon", "Report", "SearchOptions", "SearchResult", "ShapeProblem", "ShapeSearchOptions",
    "ShapeSpec", "check_diameter", "check_domain_reduction", "check_segment_region",
    "checkpoint_load", "checkpoint_save", "convex_hull", "fixed_two_search", "hull_area",
    "lipschitz_constants", "lipschitz_derivations", "margin", "max_over_shapes",
    "min_over_motions", "normalize_unit_perimeter", "objective_f", "objective_f_many",
    "objective_f_reference", "polygon_area", "psi", "run_search", "split", "trapezoid_bound",
    "validate_lipschitz", "y_extent_bound",
]
