"""Oriented-rectangle overlap tests used for collision detection."""

from __future__ import annotations

import math

import numpy as np

from behaviorbench.env.types import VehicleState


def rectangle_corners(
    x: float, y: float, heading: float, length: float, width: float
) -> np.ndarray:
    """Return the four corners of an oriented rectangle as a (4, 2) array.

    Corners are listed counter-clockwise starting from the front-left.
    """
    c = math.cos(heading)
    s = math.sin(heading)
    hl = 0.5 * length
    hw = 0.5 * width
    local = np.array(
        [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]], dtype=np.float64
    )
    rot = np.array([[c, -s], [s, c]], dtype=np.float64)
    return local @ rot.T + np.array([x, y], dtype=np.float64)


def vehicle_corners(v: VehicleState) -> np.ndarray:
    return rectangle_corners(v.x, v.y, v.heading, v.length, v.width)


def _axes(heading_a: float, heading_b: float) -> list[tuple[float, float]]:
    axes = []
    for h in (heading_a, heading_b):
        c = math.cos(h)
        s = math.sin(h)
        axes.append((c, s))
        axes.append((-s, c))
    return axes


def sat_margin(a: VehicleState, b: VehicleState) -> float:
    """Smallest projection overlap across all separating-axis candidates.

    Positive values mean the rectangles overlap by at least that much along
    every edge normal; negative values give the gap along the best
    separating axis.
    """
    ca = vehicle_corners(a)
    cb = vehicle_corners(b)
    margin = math.inf
    for ax, ay in _axes(a.heading, b.heading):
        pa = ca[:, 0] * ax + ca[:, 1] * ay
        pb = cb[:, 0] * ax + cb[:, 1] * ay
        overlap = min(pa.max(), pb.max()) - max(pa.min(), pb.min())
        margin = min(margin, overlap)
    return margin


def sat_overlap(a: VehicleState, b: VehicleState) -> bool:
    """True iff the oriented bounding rectangles of a and b intersect.

    Touching boundaries count as an intersection.
    """
    return sat_margin(a, b) >= 0.0
