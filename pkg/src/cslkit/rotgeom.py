"""Oriented-box representations, conversions and exact rotated IoU.

Two five-parameter conventions are supported:

* 90-degree convention: theta is the acute angle from the x-axis to the
  side named ``w``, restricted to [-90, 0).
* 180-degree long-edge convention: theta is measured for the long side
  ``h``, restricted to [-90, 90).

All angles are degrees, all coordinates use the mathematical convention
(y up, counter-clockwise positive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EPS = 1e-9


class InvalidGeometryError(ValueError):
    """Raised for degenerate or malformed geometric input."""


@dataclass(frozen=True)
class OrientedBox90:
    """Rotated rectangle, 90-degree convention: theta in [-90, 0) is the
    angle from the x-axis to the side named w."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise InvalidGeometryError(f"non-positive sides: w={self.w}, h={self.h}")
        if not (-90.0 <= self.theta < 0.0):
            raise InvalidGeometryError(f"theta {self.theta} outside [-90, 0)")


@dataclass(frozen=True)
class OrientedBox180:
    """Rotated rectangle, long-edge convention: h is the long side, theta
    in [-90, 90) is the angle of the long side."""

    cx: float
    cy: float
    h: float
    w: float
    theta: float

    def __post_init__(self):
        if not (self.h >= self.w > 0):
            raise InvalidGeometryError(f"need h >= w > 0, got h={self.h}, w={self.w}")
        if not (-90.0 <= self.theta < 90.0):
            raise InvalidGeometryError(f"theta {self.theta} outside [-90, 90)")


@dataclass(frozen=True)
class QuadBox:
    """Four corners in canonical order: counter-clockwise, starting at the
    lowest (then leftmost) vertex."""

    vertices: tuple  # 4 tuples (x, y)

    def as_array(self):
        return np.asarray(self.vertices, dtype=float)


def canonicalize90(cx, cy, w, h, theta_free):
    """Reduce a free-angle (cx, cy, w, h, theta) into the 90-degree
    convention. A 90-degree shift of theta swaps w and h; theta = 0 is
    represented as theta = -90 with sides swapped."""
    if not (w > 0 and h > 0):
        raise InvalidGeometryError(f"non-positive sides: w={w}, h={h}")
    t = theta_free % 90.0  # [0, 90); may round up to exactly 90.0
    if t >= 90.0:
        t = 0.0
    theta = t - 90.0  # [-90, 0)
    k = round((theta_free - theta) / 90.0)
    if k % 2 != 0:
        w, h = h, w
    return OrientedBox90(float(cx), float(cy), float(w), float(h), float(theta))


def canonicalize180(cx, cy, a, b, theta_free):
    """Reduce (cx, cy, a, b, theta-of-side-a) into the long-edge
    convention: long side in h, theta for the long side, in [-90, 90).
    A square tie (a == b) resolves to theta in [-90, 0)."""
    if not (a > 0 and b > 0):
        raise InvalidGeometryError(f"non-positive sides: a={a}, b={b}")
    if b > a:
        a, b = b, a
        theta_free = theta_free + 90.0
    t = (theta_free + 90.0) % 180.0  # may round up to exactly 180.0
    if t >= 180.0:
        t = 0.0
    theta = t - 90.0  # [-90, 90)
    if a == b and theta >= 0.0:
        theta -= 90.0
    return OrientedBox180(float(cx), float(cy), float(a), float(b), float(theta))


def _corners(cx, cy, along, across, theta_deg):
    """Corners of a rectangle with side `along` at angle theta_deg and
    side `across` perpendicular to it, before canonical ordering."""
    t = math.radians(theta_deg)
    ux, uy = math.cos(t), math.sin(t)
    vx, vy = -uy, ux
    ha, hb = along / 2.0, across / 2.0
    return np.array(
        [
            (cx + ha * ux + hb * vx, cy + ha * uy + hb * vy),
            (cx - ha * ux + hb * vx, cy - ha * uy + hb * vy),
            (cx - ha * ux - hb * vx, cy - ha * uy - hb * vy),
            (cx + ha * ux - hb * vx, cy + ha * uy - hb * vy),
        ]
    )


def to_quad(box):
    """Expand an oriented box into its four canonically ordered corners."""
    if isinstance(box, OrientedBox90):
        pts = _corners(box.cx, box.cy, box.w, box.h, box.theta)
    elif isinstance(box, OrientedBox180):
        pts = _corners(box.cx, box.cy, box.h, box.w, box.theta)
    else:
        raise TypeError(f"unsupported box type {type(box)!r}")
    return order_corners(QuadBox(tuple(map(tuple, pts))))


def order_corners(quad):
    """Canonically order four vertices: counter-clockwise winding,
    starting at the vertex with minimal y (ties broken by minimal x)."""
    pts = np.asarray(quad.vertices if isinstance(quad, QuadBox) else quad, dtype=float)
    if pts.shape != (4, 2):
        raise InvalidGeometryError(f"expected 4 vertices, got shape {pts.shape}")
    for i in range(4):
        for j in range(i + 1, 4):
            if np.all(np.abs(pts[i] - pts[j]) <= EPS):
                raise InvalidGeometryError("duplicate vertices")
    centroid = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0])
    pts = pts[np.argsort(ang)]  # counter-clockwise around centroid
    start = min(range(4), key=lambda i: (pts[i, 1], pts[i, 0]))
    pts = np.roll(pts, -start, axis=0)
    return QuadBox(tuple(map(tuple, pts)))


def polygon_area(pts):
    """Unsigned shoelace area; accepts any (N, 2) vertex sequence."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _signed_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def convex_intersection(p, q):
    """Intersection of two convex counter-clockwise polygons by
    successive half-plane clipping (closed half-planes, so boundary
    contacts are kept but contribute zero area). Returns an (N, 2)
    array, possibly empty."""
    out = [tuple(v) for v in np.asarray(p, dtype=float)]
    clip = np.asarray(q, dtype=float)
    n = len(clip)
    for i in range(n):
        if not out:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay

        def side(pt):
            return ex * (pt[1] - ay) - ey * (pt[0] - ax)

        nxt = []
        m = len(out)
        for j in range(m):
            cur, prv = out[j], out[j - 1]
            sc, sp = side(cur), side(prv)
            if sc >= -EPS:
                if sp < -EPS:
                    nxt.append(_line_intersect(prv, cur, (ax, ay), (bx, by)))
                nxt.append(cur)
            elif sp >= -EPS:
                nxt.append(_line_intersect(prv, cur, (ax, ay), (bx, by)))
        out = _dedup(nxt)
    return np.asarray(out, dtype=float).reshape(-1, 2)


def _line_intersect(p1, p2, p3, p4):
    x1, y1 = p1
    x2, y2 = p2
    x3, y3 = p3
    x4, y4 = p4
    den = (x1 - x2) * (y3 - y4) - (y1 - y2) * (x3 - x4)
    if abs(den) < 1e-300:
        return p2  # parallel; endpoint already on the line
    t = ((x1 - x3) * (y3 - y4) - (y1 - y3) * (x3 - x4)) / den
    return (x1 + t * (x2 - x1), y1 + t * (y2 - y1))


def _dedup(pts):
    out = []
    for p in pts:
        if not out or (abs(p[0] - out[-1][0]) > EPS or abs(p[1] - out[-1][1]) > EPS):
            out.append(p)
    if len(out) > 1 and abs(out[0][0] - out[-1][0]) <= EPS and abs(out[0][1] - out[-1][1]) <= EPS:
        out.pop()
    return out


def _convex_hull(pts):
    """Monotone-chain convex hull, counter-clockwise."""
    pts = sorted(map(tuple, pts))
    if len(pts) <= 2:
        return np.asarray(pts, dtype=float)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1], dtype=float)


def quad_to_box180(quad):
    """Minimum-area enclosing rectangle of a quadrilateral, as an
    OrientedBox180. Rotating calipers over convex-hull edges; area ties
    broken by the smaller canonical theta. Exact inverse of to_quad for
    true rectangles."""
    pts = np.asarray(quad.vertices if isinstance(quad, QuadBox) else quad, dtype=float)
    hull = _convex_hull(pts)
    if len(hull) < 3 or polygon_area(hull) <= EPS:
        raise InvalidGeometryError("degenerate quadrilateral (zero area)")
    candidates = []
    n = len(hull)
    for i in range(n):
        ex, ey = hull[(i + 1) % n] - hull[i]
        phi = math.atan2(ey, ex)
        c, s = math.cos(phi), math.sin(phi)
        xs = hull[:, 0] * c + hull[:, 1] * s
        ys = -hull[:, 0] * s + hull[:, 1] * c
        e1 = xs.max() - xs.min()
        e2 = ys.max() - ys.min()
        mx, my = (xs.max() + xs.min()) / 2.0, (ys.max() + ys.min()) / 2.0
        cx = mx * c - my * s
        cy = mx * s + my * c
        box = canonicalize180(cx, cy, e1, e2, math.degrees(phi))
        candidates.append((e1 * e2, box))
    best_area = min(a for a, _ in candidates)
    ties = [b for a, b in candidates if a <= best_area * (1.0 + 1e-12) + 1e-12]
    return min(ties, key=lambda b: b.theta)


def box_area(box):
    if isinstance(box, OrientedBox90):
        return box.w * box.h
    return box.h * box.w


def rotated_iou(a, b):
    """Exact intersection-over-union of two oriented boxes via convex
    polygon clipping. Symmetric; 1 iff the point sets coincide."""
    pa = to_quad(a).as_array()
    pb = to_quad(b).as_array()
    inter = polygon_area(convex_intersection(pa, pb))
    union = box_area(a) + box_area(b) - inter
    if union <= 0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def aligned_bbox(box):
    """Axis-aligned enclosing box (xmin, ymin, xmax, ymax)."""
    pts = to_quad(box).as_array()
    return (pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max())


def aligned_iou(a, b):
    """Closed-form IoU of two axis-aligned (xmin, ymin, xmax, ymax) boxes."""
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0
