"""Planar predicates for thin rods."""
from __future__ import annotations

import math

from .config_space import Particle

ORIENT_TOL = 1e-12


def orient2d(a, b, c) -> float:
    """Twice the signed area of triangle abc (positive when counter-clockwise)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _sign(v: float, tol: float) -> int:
    if abs(v) <= tol:
        return 0
    return 1 if v > 0 else -1


def _on_segment(a, b, p, tol: float) -> bool:
    # p is (nearly) collinear with ab; check it lies within the bounding box
    return (
        min(a[0], b[0]) - tol <= p[0] <= max(a[0], b[0]) + tol
        and min(a[1], b[1]) - tol <= p[1] <= max(a[1], b[1]) + tol
    )


def segments_intersect(p1, p2, q1, q2, tol: float = ORIENT_TOL) -> bool:
    """Closed segments p1p2 and q1q2 meet. Determinants within ``tol`` count as zero."""
    d1 = _sign(orient2d(q1, q2, p1), tol)
    d2 = _sign(orient2d(q1, q2, p2), tol)
    d3 = _sign(orient2d(p1, p2, q1), tol)
    d4 = _sign(orient2d(p1, p2, q2), tol)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    if d1 == 0 and _on_segment(q1, q2, p1, tol):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2, tol):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1, tol):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2, tol):
        return True
    return False


def rod_endpoints(p: Particle, half_length: float):
    x, y = p.location
    c, s = math.cos(p.mark), math.sin(p.mark)
    return (x - half_length * c, y - half_length * s), (x + half_length * c, y + half_length * s)


def rods_intersect(a: Particle, b: Particle, half_length: float) -> bool:
    """Whether the rods of length ``2*half_length`` centred at a and b, oriented by their marks, meet."""
    if a.location == b.location:
        return True
    p1, p2 = rod_endpoints(a, half_length)
    q1, q2 = rod_endpoints(b, half_length)
    return segments_intersect(p1, p2, q1, q2)
