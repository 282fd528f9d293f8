"""Half-court geometry on the 50 ft x 35 ft frame, origin bottom-left.

Standard NBA constants: the basket sits 25 ft across and 4.75 ft up
from the baseline; the three-point arc has radius 23.75 ft with
straight corner segments 22 ft from the basket center line extending
14 ft up from the baseline. All values are overridable per call.
"""

from __future__ import annotations

import numpy as np

from .grid import Domain, DomainGrid

COURT_DOMAIN = Domain(0.0, 50.0, 0.0, 35.0)
BASKET_XY = (25.0, 4.75)
THREE_ARC_RADIUS_FT = 23.75
CORNER_THREE_OFFSET_FT = 22.0
CORNER_EXTENT_FT = 14.0


def court_grid(cell_ft: float = 1.0) -> DomainGrid:
    """The court at 1 ft resolution (50 x 35 cells) by default."""
    n_x = round(COURT_DOMAIN.width / cell_ft)
    n_y = round(COURT_DOMAIN.height / cell_ft)
    return DomainGrid(COURT_DOMAIN, n_x, n_y)


def distance_to_basket(points: np.ndarray, basket=BASKET_XY,
                       round_to_foot: bool = True) -> np.ndarray:
    """Euclidean distance to the basket, rounded to whole feet to match
    the shot-chart convention."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = np.hypot(pts[:, 0] - basket[0], pts[:, 1] - basket[1])
    return np.round(d) if round_to_foot else d


def is_three_point_region(points: np.ndarray, basket=BASKET_XY,
                          arc_radius: float = THREE_ARC_RADIUS_FT,
                          corner_offset: float = CORNER_THREE_OFFSET_FT,
                          corner_extent: float = CORNER_EXTENT_FT) -> np.ndarray:
    """True where a location is beyond the three-point line.

    Below the corner-segment extent the line is vertical at
    basket_x +/- corner_offset; above it, the circular arc applies.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dx = np.abs(pts[:, 0] - basket[0])
    in_corner_zone = pts[:, 1] <= corner_extent
    beyond_corner = dx >= corner_offset
    d = np.hypot(pts[:, 0] - basket[0], pts[:, 1] - basket[1])
    beyond_arc = d >= arc_radius
    return np.where(in_corner_zone, beyond_corner, beyond_arc)


def shot_value(points: np.ndarray, **geometry) -> np.ndarray:
    """Point value (2 or 3) of a made shot at each location."""
    return np.where(is_three_point_region(points, **geometry), 3.0, 2.0)
