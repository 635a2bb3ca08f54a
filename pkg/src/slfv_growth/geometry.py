"""Exact geometry of tilted ellipses.

An ellipse is parametrised by its center, semi-axes ``a`` (along the rotated
x-axis) and ``b`` (along the rotated y-axis), and a tilt angle ``gamma`` in
``(-pi/2, pi/2)``.  Membership uses the closed ellipse; boundary cases are
Lebesgue-null and never affect positive-area predicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Tolerance for boundary comparisons in membership / overlap predicates.
TOL = 1e-9

# Trig tables for the coarse scans in _circle_quadratic_min.
_SCAN_T = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
_SCAN_C, _SCAN_S = np.cos(_SCAN_T), np.sin(_SCAN_T)
_SCAN_C2, _SCAN_S2 = np.cos(2.0 * _SCAN_T), np.sin(2.0 * _SCAN_T)
_FINE_T = np.linspace(0.0, 2.0 * math.pi, 1024, endpoint=False)
_FINE_C, _FINE_S = np.cos(_FINE_T), np.sin(_FINE_T)
_FINE_C2, _FINE_S2 = np.cos(2.0 * _FINE_T), np.sin(2.0 * _FINE_T)


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a: float
    b: float
    gamma: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"semi-axes must be positive, got a={self.a}, b={self.b}")
        if not (-math.pi / 2 < self.gamma < math.pi / 2):
            raise ValueError(f"gamma must lie in (-pi/2, pi/2), got {self.gamma}")

    @property
    def center(self):
        return (self.cx, self.cy)


def area(e: Ellipse) -> float:
    """Area pi*a*b."""
    return math.pi * e.a * e.b


def max_horizontal_offset(a: float, b: float, gamma: float) -> tuple[float, float]:
    """Angle and value of the maximal x-offset of a boundary point from the center.

    Returns ``(theta_max, D)`` with ``theta_max = arctan(-(b/a) tan gamma)``
    and ``D = sqrt(a^2 cos^2 gamma + b^2 sin^2 gamma)``.  The boundary point at
    parameter ``theta_max`` attains the offset ``D``.
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"semi-axes must be positive, got a={a}, b={b}")
    if not (-math.pi / 2 < gamma < math.pi / 2):
        raise ValueError(f"gamma must lie in (-pi/2, pi/2), got {gamma}")
    theta_max = math.atan(-(b / a) * math.tan(gamma))
    d = math.sqrt(a * a * math.cos(gamma) ** 2 + b * b * math.sin(gamma) ** 2)
    return theta_max, d


def extreme_point_offset(a: float, b: float, gamma: float) -> tuple[float, float]:
    """Offset from the center to the unique rightmost point of the ellipse."""
    theta_max, _ = max_horizontal_offset(a, b, gamma)
    cg, sg = math.cos(gamma), math.sin(gamma)
    ct, st = math.cos(theta_max), math.sin(theta_max)
    return (a * ct * cg - b * st * sg, a * ct * sg + b * st * cg)


def contains(e: Ellipse, p: tuple[float, float]) -> bool:
    """Closed-ellipse membership: inverse-rotate and axis-scale p - center."""
    dx = p[0] - e.cx
    dy = p[1] - e.cy
    cg, sg = math.cos(e.gamma), math.sin(e.gamma)
    u = (cg * dx + sg * dy) / e.a
    v = (-sg * dx + cg * dy) / e.b
    return u * u + v * v <= 1.0 + TOL


def sample_uniform(e: Ellipse, rng) -> tuple[float, float]:
    """Uniform point in the ellipse: uniform disk mapped through the axis
    scaling, the rotation, then the translation."""
    theta = rng.uniform(0.0, 2.0 * math.pi)
    r = math.sqrt(rng.uniform(0.0, 1.0))
    x = e.a * r * math.cos(theta)
    y = e.b * r * math.sin(theta)
    cg, sg = math.cos(e.gamma), math.sin(e.gamma)
    return (e.cx + cg * x - sg * y, e.cy + sg * x + cg * y)


def _circle_quadratic_min(a0, a1, b1, a2, b2) -> float:
    """Minimum over theta of a0 + a1 cos t + b1 sin t + a2 cos 2t + b2 sin 2t.

    Coarse 64-point scan followed by Newton refinement from the best local
    minima; dense 1024-point fallback if Newton stalls.
    """

    def f(t):
        return a0 + a1 * math.cos(t) + b1 * math.sin(t) + a2 * math.cos(2 * t) + b2 * math.sin(2 * t)

    def df(t):
        return -a1 * math.sin(t) + b1 * math.cos(t) - 2 * a2 * math.sin(2 * t) + 2 * b2 * math.cos(2 * t)

    def d2f(t):
        return -a1 * math.cos(t) - b1 * math.sin(t) - 4 * a2 * math.cos(2 * t) - 4 * b2 * math.sin(2 * t)

    vals = a0 + a1 * _SCAN_C + b1 * _SCAN_S + a2 * _SCAN_C2 + b2 * _SCAN_S2
    best = float(vals.min())
    # Newton from every local minimum of the coarse scan.
    local = (vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1))
    starts = _SCAN_T[local]
    converged = False
    for t in starts:
        tt = t
        for _ in range(50):
            h = d2f(tt)
            if h <= 0:
                break
            delta = df(tt) / h
            tt -= delta
            if abs(delta) < 1e-13:
                converged = True
                break
        v = f(tt)
        if v < best:
            best = v
    if not converged:
        fine = a0 + a1 * _FINE_C + b1 * _FINE_S + a2 * _FINE_C2 + b2 * _FINE_S2
        best = min(best, float(fine.min()))
    return best


def _overlap_params(cx1, cy1, a1, b1, g1, cx2, cy2, a2, b2, g2) -> bool:
    """Positive-area overlap test on raw parameters (hot path for simulators)."""
    dx = cx2 - cx1
    dy = cy2 - cy1
    d = math.hypot(dx, dy)
    # Inscribed / bounding circle screens decide almost all pairs.
    if d < min(a1, b1) + min(a2, b2):
        return True
    if d > max(a1, b1) + max(a2, b2):
        return False

    # Map e1 to the unit disk; e2 becomes the ellipse {c + B u : |u| <= 1}.
    cg1, sg1 = math.cos(g1), math.sin(g1)
    cg2, sg2 = math.cos(g2), math.sin(g2)
    cx = (cg1 * dx + sg1 * dy) / a1
    cy = (-sg1 * dx + cg1 * dy) / b1
    if cx * cx + cy * cy < 1.0:
        return True
    # B = S1^-1 R1^T R2 S2
    r11 = cg1 * cg2 + sg1 * sg2
    r12 = -cg1 * sg2 + sg1 * cg2
    b11 = r11 * a2 / a1
    b12 = r12 * b2 / a1
    b21 = -r12 * a2 / b1
    b22 = r11 * b2 / b1
    det = b11 * b22 - b12 * b21
    i11 = b22 / det
    i12 = -b12 / det
    i21 = -b21 / det
    i22 = b11 / det
    # Q = B^-T B^-1 (symmetric)
    q11 = i11 * i11 + i21 * i21
    q12 = i11 * i12 + i21 * i22
    q22 = i12 * i12 + i22 * i22
    # Origin (= center of e1 image) inside e2 image?
    if cx * (q11 * cx + q12 * cy) + cy * (q12 * cx + q22 * cy) < 1.0:
        return True
    # Otherwise the interiors intersect iff the unit circle enters the image
    # of e2: minimise (p - c)^T Q (p - c) over |p| = 1.
    u1 = q11 * cx + q12 * cy
    u2 = q12 * cx + q22 * cy
    a0 = 0.5 * (q11 + q22) + cx * u1 + cy * u2
    a1c = -2.0 * u1
    b1c = -2.0 * u2
    a2c = 0.5 * (q11 - q22)
    b2c = q12
    # Amplitude bound: min over the circle is at least a0 - |A1| - |A2|.
    amp1 = math.hypot(a1c, b1c)
    amp2 = math.hypot(a2c, b2c)
    if a0 - amp1 - amp2 >= 1.0:
        return False
    # One-point witness at the minimiser of the dominant first harmonic.
    if amp1 > 0.0:
        ct, st = -a1c / amp1, -b1c / amp1
        probe = a0 - amp1 + a2c * (2.0 * ct * ct - 1.0) + b2c * (2.0 * st * ct)
        if probe < 1.0 - TOL:
            return True
    return _circle_quadratic_min(a0, a1c, b1c, a2c, b2c) < 1.0 - TOL


def intersects_positively(e1: Ellipse, e2: Ellipse) -> bool:
    """True iff the two ellipses overlap on a set of positive area."""
    return _overlap_params(
        e1.cx, e1.cy, e1.a, e1.b, e1.gamma, e2.cx, e2.cy, e2.a, e2.b, e2.gamma
    )


def point_to_rect_distance(x: float, y: float, x0: float, x1: float, y0: float, y1: float) -> float:
    """Euclidean distance from a point to a closed axis-aligned rectangle."""
    dx = max(x0 - x, 0.0, x - x1)
    dy = max(y0 - y, 0.0, y - y1)
    return math.hypot(dx, dy)


def ellipse_rect_intersects(e: Ellipse, x0: float, x1: float, y0: float, y1: float) -> bool:
    """Positive-area overlap of an ellipse and an axis-aligned rectangle.

    The ellipse is mapped to the unit disk; the rectangle becomes a convex
    quadrilateral and the test reduces to dist(origin, quad) < 1, which has a
    closed form (point-in-polygon plus segment distances).
    """
    # Fast path: axis-aligned bounding check.
    r = max(e.a, e.b)
    if e.cx + r < x0 or e.cx - r > x1 or e.cy + r < y0 or e.cy - r > y1:
        return False
    rmin = min(e.a, e.b)
    if point_to_rect_distance(e.cx, e.cy, x0, x1, y0, y1) < rmin:
        return True

    cg, sg = math.cos(e.gamma), math.sin(e.gamma)

    def to_disk(px, py):
        dx = px - e.cx
        dy = py - e.cy
        return ((cg * dx + sg * dy) / e.a, (-sg * dx + cg * dy) / e.b)

    quad = [to_disk(x0, y0), to_disk(x1, y0), to_disk(x1, y1), to_disk(x0, y1)]
    # Origin inside the quadrilateral?
    inside = True
    n = len(quad)
    sign = 0.0
    for i in range(n):
        ax, ay = quad[i]
        bx, by = quad[(i + 1) % n]
        cross = (bx - ax) * (-ay) - (by - ay) * (-ax)
        if sign == 0.0:
            sign = cross
        elif cross * sign < 0:
            inside = False
            break
    if inside:
        return True
    # Minimum distance from origin to the quad edges.
    dmin = math.inf
    for i in range(n):
        ax, ay = quad[i]
        bx, by = quad[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        L2 = ex * ex + ey * ey
        t = 0.0 if L2 == 0 else max(0.0, min(1.0, -(ax * ex + ay * ey) / L2))
        px, py = ax + t * ex, ay + t * ey
        dmin = min(dmin, math.hypot(px, py))
    return dmin < 1.0 - TOL
