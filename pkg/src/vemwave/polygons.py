"""Planar polygon primitives shared by meshing and element geometry.

Polygons are numpy arrays of shape (n, 2) whose rows are vertex
coordinates in counterclockwise order.  All routines assume simple
(non self-intersecting) loops unless stated otherwise.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog


def signed_area(verts: np.ndarray) -> float:
    """Shoelace signed area, positive for counterclockwise loops."""
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def area_centroid(verts: np.ndarray) -> tuple[float, np.ndarray]:
    """Area and area centroid of a simple polygon.

    Returns
    -------
    area : float
        Signed area (positive for counterclockwise input).
    centroid : ndarray, shape (2,)
    """
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    if area == 0.0:
        raise ValueError("degenerate polygon with zero area")
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    return area, np.array([cx, cy])


def diameter(verts: np.ndarray) -> float:
    """Largest pairwise vertex distance (the polygon diameter h_E)."""
    diff = verts[:, None, :] - verts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=2)).max())


def min_vertex_gap(verts: np.ndarray) -> float:
    """Smallest pairwise vertex distance."""
    diff = verts[:, None, :] - verts[None, :, :]
    d2 = (diff ** 2).sum(axis=2)
    n = len(verts)
    d2[np.arange(n), np.arange(n)] = np.inf
    return float(np.sqrt(d2.min()))


def is_convex(verts: np.ndarray, tol: float = 1e-12) -> bool:
    """True when every vertex turn is a left turn (within tol * scale)."""
    a = verts
    b = np.roll(verts, -1, axis=0)
    c = np.roll(verts, -2, axis=0)
    u = b - a
    v = c - b
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    scale = diameter(verts) ** 2
    return bool(np.all(cross >= -tol * scale))


def _proper_intersect(p1, p2, q1, q2) -> bool:
    """Segment intersection test excluding shared endpoints."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def is_simple(verts: np.ndarray) -> bool:
    """True when no two non-adjacent edges intersect.

    Quadratic in the edge count, which is fine for mesh cells.
    """
    n = len(verts)
    for i in range(n):
        p1, p2 = verts[i], verts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            q1, q2 = verts[j], verts[(j + 1) % n]
            if _proper_intersect(p1, p2, q1, q2):
                return False
    return True


def edge_normals(verts: np.ndarray) -> np.ndarray:
    """Unit outward normals of each edge (i -> i+1) for a CCW polygon."""
    tang = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(tang, axis=1)
    if np.any(lengths == 0.0):
        raise ValueError("polygon has a zero-length edge")
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]
    return normals


def kernel_chebyshev(verts: np.ndarray) -> tuple[np.ndarray, float]:
    """Center and radius of the largest ball inside the polygon kernel.

    The kernel of a simple polygon is the intersection of the inner
    half-planes of its edges; a point of the kernel sees the whole
    polygon.  The largest inscribed ball of that intersection is the
    Chebyshev ball, found here by linear programming over the edge
    half-plane constraints.  A non-positive radius means the kernel is
    empty and the polygon is not star-shaped.

    Returns
    -------
    center : ndarray, shape (2,)
    radius : float
    """
    normals = edge_normals(verts)
    # ball of radius r around p inside every half-plane:
    # (p - v_i) . n_in >= r  with n_in = -outward normal
    n_in = -normals
    a_ub = np.column_stack([-n_in, np.ones(len(verts))])
    b_ub = -(n_in * verts).sum(axis=1)
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(None, None), (None, None), (None, None)],
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"kernel LP failed: {res.message}")
    center = np.array(res.x[:2])
    radius = float(res.x[2])
    return center, radius


def contains_point(verts: np.ndarray, point: np.ndarray, tol: float = 1e-12) -> bool:
    """Point-in-polygon test by crossing count; boundary counts as inside."""
    x, y = point
    n = len(verts)
    scale = max(diameter(verts), 1.0)
    inside = False
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        # on-edge check against the segment
        ex, ey = x2 - x1, y2 - y1
        ll = ex * ex + ey * ey
        t = ((x - x1) * ex + (y - y1) * ey) / ll
        if 0.0 <= t <= 1.0:
            px, py = x1 + t * ex, y1 + t * ey
            if (x - px) ** 2 + (y - py) ** 2 <= (tol * scale) ** 2:
                return True
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * ex / ey
            if xi > x:
                inside = not inside
    return inside


def second_moment_about(verts: np.ndarray, point: np.ndarray) -> float:
    """Integral of |x - point|^2 over the polygon (shoelace formulas)."""
    x = verts[:, 0] - point[0]
    y = verts[:, 1] - point[1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    ix2 = np.sum((x * x + x * xn + xn * xn) * cross) / 12.0
    iy2 = np.sum((y * y + y * yn + yn * yn) * cross) / 12.0
    return float(ix2 + iy2)
