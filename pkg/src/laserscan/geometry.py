"""Planar geometry helpers shared by the planning modules.

Polygons are (N, 2) arrays of vertices in order; the closing edge from the
last vertex back to the first is implicit.  Points are (x, y) pairs.
"""
from __future__ import annotations

import numpy as np


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (N, 2) point array, got shape {pts.shape}")
    return pts


def cross2(a, b) -> float:
    """z component of the cross product of two 2-vectors."""
    return float(a[0] * b[1] - a[1] * b[0])


def signed_area(polygon) -> float:
    """Shoelace area; positive when vertices wind counterclockwise in (x, y)."""
    p = as_points(polygon)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _edges(polygon):
    p = as_points(polygon)
    return p, np.roll(p, -1, axis=0)


def distance_to_polygon(point, polygon) -> tuple[float, np.ndarray]:
    """Distance from a point to the polygon boundary, plus the nearest boundary point."""
    a, b = _edges(polygon)
    p = np.asarray(point, dtype=float)
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    safe = np.where(denom == 0.0, 1.0, denom)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / safe, 0.0, 1.0)
    proj = a + t[:, None] * ab
    d = np.hypot(*(p - proj).T)
    i = int(np.argmin(d))
    return float(d[i]), proj[i].copy()


def point_in_polygon(point, polygon, boundary_eps: float = 1e-9) -> bool:
    """Even-odd crossing test; points within boundary_eps of an edge count as inside."""
    p = np.asarray(point, dtype=float)
    dist, _ = distance_to_polygon(p, polygon)
    if dist <= boundary_eps:
        return True
    a, b = _edges(polygon)
    # Edge straddles the horizontal ray from p in +x direction.
    ya, yb = a[:, 1], b[:, 1]
    straddle = (ya > p[1]) != (yb > p[1])
    if not np.any(straddle):
        return False
    a, b = a[straddle], b[straddle]
    xs = a[:, 0] + (p[1] - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
    return bool(np.count_nonzero(xs > p[0]) % 2)


def line_polygon_intersections(origin, direction, polygon, eps: float = 1e-12) -> np.ndarray:
    """Sorted parameters t where origin + t * direction meets the polygon boundary.

    Runs over every edge; an edge collinear with the line contributes both of
    its endpoints.  Duplicate hits at shared vertices are kept (harmless for
    extreme-value use) but exact duplicates are collapsed.
    """
    o = np.asarray(origin, dtype=float)
    u = np.asarray(direction, dtype=float)
    if not np.isfinite(u).all() or float(np.hypot(*u)) == 0.0:
        raise ValueError("direction must be a nonzero finite vector")
    a, b = _edges(polygon)
    e = b - a
    ao = a - o
    denom = u[0] * e[:, 1] - u[1] * e[:, 0]
    ts: list[float] = []
    uu = float(u @ u)
    parallel = np.abs(denom) < eps
    # Generic crossings, vectorised.
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ao[:, 0] * e[:, 1] - ao[:, 1] * e[:, 0]) / denom
        s = (ao[:, 0] * u[1] - ao[:, 1] * u[0]) / denom
    hit = ~parallel & (s >= -1e-9) & (s <= 1.0 + 1e-9)
    ts.extend(t[hit].tolist())
    # Collinear edges lie on the line: both endpoints are intersections.
    if np.any(parallel):
        perp = np.abs(ao[:, 0] * u[1] - ao[:, 1] * u[0])
        for i in np.nonzero(parallel & (perp < eps * max(1.0, np.max(np.abs(ao)))))[0]:
            ts.append(float((a[i] - o) @ u) / uu)
            ts.append(float((b[i] - o) @ u) / uu)
    out = np.sort(np.asarray(ts, dtype=float))
    if out.size > 1:
        keep = np.concatenate(([True], np.diff(out) > 0.0))
        out = out[keep]
    return out
