"""Element geometry: scaled monomials, polygon quadrature, edge nodes.

The polynomial workhorse is the scaled monomial basis

    m_a(x) = ((x - x_E) / h_E)^a1 * ((y - y_E) / h_E)^a2,

centered at the element centroid x_E and scaled by the element diameter
h_E, ordered by total degree and then lexicographically:
1; x, y; x^2, xy, y^2; ...  Quadrature on polygons is built by fanning
triangles from an interior point and applying symmetric triangle rules
with positive weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .polygons import area_centroid, diameter, is_convex, kernel_chebyshev, signed_area


class QuadratureError(Exception):
    """Raised when no valid rule can be built for a polygon."""


def monomial_exponents(degree: int) -> np.ndarray:
    """Exponent pairs of the 2D monomials up to `degree`, graded order.

    Within each total degree d the first exponent decreases:
    (d,0), (d-1,1), ..., (0,d).
    """
    pairs = [(d - i, i) for d in range(degree + 1) for i in range(d + 1)]
    return np.array(pairs, dtype=int)


def polynomial_space_dim(degree: int) -> int:
    if degree < 0:
        return 0
    return (degree + 1) * (degree + 2) // 2


@dataclass(frozen=True)
class ScaledMonomialBasis:
    """Scaled monomial basis attached to one element.

    Attributes
    ----------
    center : ndarray, shape (2,)
        Element centroid x_E.
    diameter : float
        Element diameter h_E used as the scaling length.
    degree : int
        Highest total degree k.
    exponents : ndarray, shape (n_k, 2)
        Exponent pairs in graded order; n_k = (k+1)(k+2)/2.
    """

    center: np.ndarray
    diameter: float
    degree: int
    exponents: np.ndarray

    @classmethod
    def for_polygon(cls, verts: np.ndarray, degree: int) -> "ScaledMonomialBasis":
        _, centroid = area_centroid(verts)
        return cls(centroid, diameter(verts), degree, monomial_exponents(degree))

    @property
    def size(self) -> int:
        return len(self.exponents)

    def index_of(self, a1: int, a2: int) -> int:
        d = a1 + a2
        return polynomial_space_dim(d - 1) + a2

    def _local(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.center) / self.diameter

    def values(self, points: np.ndarray) -> np.ndarray:
        """Basis values at `points`; shape (n_points, n_k)."""
        xi = self._local(points)
        return xi[:, 0:1] ** self.exponents[:, 0] * xi[:, 1:2] ** self.exponents[:, 1]

    def gradients(self, points: np.ndarray) -> np.ndarray:
        """Basis gradients at `points`; shape (n_points, n_k, 2)."""
        xi = self._local(points)
        out = np.zeros((len(xi), self.size, 2))
        for j, (a, b) in enumerate(self.exponents):
            if a > 0:
                out[:, j, 0] = a * xi[:, 0] ** (a - 1) * xi[:, 1] ** b
            if b > 0:
                out[:, j, 1] = b * xi[:, 0] ** a * xi[:, 1] ** (b - 1)
        return out / self.diameter

    def laplacian_in_basis(self, j: int) -> list[tuple[int, float]]:
        """Coefficients of Delta m_j expanded in lower-degree monomials."""
        a, b = self.exponents[j]
        h2 = self.diameter ** 2
        terms = []
        if a >= 2:
            terms.append((self.index_of(a - 2, b), a * (a - 1) / h2))
        if b >= 2:
            terms.append((self.index_of(a, b - 2), b * (b - 1) / h2))
        return terms


def monomial_eval(basis: ScaledMonomialBasis, points: np.ndarray):
    """Values and gradients of every basis member at `points`."""
    return basis.values(points), basis.gradients(points)


# Gauss-Lobatto rules on [-1, 1]; n points integrate degree 2n-3 exactly.
_GAUSS_LOBATTO = {
    2: (np.array([-1.0, 1.0]), np.array([1.0, 1.0])),
    3: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, 4.0, 1.0]) / 3.0),
    4: (
        np.array([-1.0, -1.0 / np.sqrt(5.0), 1.0 / np.sqrt(5.0), 1.0]),
        np.array([1.0, 5.0, 5.0, 1.0]) / 6.0,
    ),
}


def gauss_lobatto(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Lobatto rule on [-1, 1]."""
    try:
        return _GAUSS_LOBATTO[n_points]
    except KeyError:
        raise QuadratureError(f"no Gauss-Lobatto rule tabulated for {n_points} points")


def edge_rule(n_points: int, p0: np.ndarray, p1: np.ndarray):
    """Gauss-Lobatto rule mapped onto the segment p0 -> p1.

    Returns physical nodes (n, 2) and weights summing to the edge length.
    """
    t, w = gauss_lobatto(n_points)
    nodes = p0 + 0.5 * (t[:, None] + 1.0) * (p1 - p0)
    length = float(np.linalg.norm(p1 - p0))
    return nodes, 0.5 * length * w


def edge_gauss_lobatto(k: int, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """Interior Gauss-Lobatto nodes (k-1 of them) on the segment p0 -> p1."""
    t, _ = gauss_lobatto(k + 1)
    return p0 + 0.5 * (t[1:-1, None] + 1.0) * (p1 - p0)


# Symmetric triangle rules in barycentric orbits, positive weights only.
# ("c", w): centroid.  ("s3", w, a): permutations of (1-2a, a, a).
# ("s6", w, a, b): permutations of (1-a-b, a, b).  Weights are area
# fractions: sum of all point weights is 1.
_TRIANGLE_ORBITS = {
    1: [("c", 1.0)],
    2: [("s3", 1.0 / 3.0, 1.0 / 6.0)],
    4: [
        ("s3", 0.223381589678011, 0.445948490915965),
        ("s3", 0.109951743655322, 0.091576213509771),
    ],
    5: [
        ("c", 0.225),
        ("s3", 0.132394152788506, 0.470142064105115),
        ("s3", 0.125939180544827, 0.101286507323456),
    ],
    6: [
        ("s3", 0.116786275726379, 0.249286745170910),
        ("s3", 0.050844906370207, 0.063089014491502),
        ("s6", 0.082851075618374, 0.310352451033785, 0.053145049844816),
    ],
    8: [
        ("c", 0.14431560767780374),
        ("s3", 0.09509163426727273, 0.45929258829273617),
        ("s3", 0.10321737053472127, 0.17056930775177431),
        ("s3", 0.03245849762319703, 0.05054722831703111),
        ("s6", 0.02723031417443719, 0.26311282963459903, 0.00839477740997043),
    ],
}

_RULE_FOR_DEGREE = {0: 1, 1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6, 7: 8, 8: 8}


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points and weights exact for polynomials of `degree`."""
    if degree not in _RULE_FOR_DEGREE:
        raise QuadratureError(f"no triangle rule tabulated for degree {degree}")
    pts, wts = [], []
    for orbit in _TRIANGLE_ORBITS[_RULE_FOR_DEGREE[degree]]:
        kind, w = orbit[0], orbit[1]
        if kind == "c":
            pts.append((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0))
            wts.append(w)
        elif kind == "s3":
            a = orbit[2]
            c = 1.0 - 2.0 * a
            for p in ((c, a, a), (a, c, a), (a, a, c)):
                pts.append(p)
                wts.append(w)
        else:
            a, b = orbit[2], orbit[3]
            c = 1.0 - a - b
            for p in ((c, a, b), (c, b, a), (a, c, b), (a, b, c), (b, c, a), (b, a, c)):
                pts.append(p)
                wts.append(w)
    points = np.array(pts)
    weights = np.array(wts)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature nodes and weights on one polygon.

    `weights` are positive and sum to the polygon area; `integrate`
    contracts sampled values against them.
    """

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def polygon_quadrature(verts: np.ndarray, degree: int) -> QuadratureRule:
    """Quadrature on a polygon, exact for polynomials up to `degree`.

    The polygon is fanned into triangles from its centroid, or from a
    kernel point when the centroid is unusable (non-convex cells).  A
    polygon with empty kernel has no star center and is rejected.
    """
    verts = np.asarray(verts, dtype=float)
    if signed_area(verts) <= 0.0:
        raise QuadratureError("polygon must be counterclockwise with positive area")
    if is_convex(verts):
        _, fan = area_centroid(verts)
    else:
        fan, radius = kernel_chebyshev(verts)
        if radius <= 0.0:
            raise QuadratureError("non-convex polygon with empty kernel")
    bary, wts = triangle_rule(degree)
    n = len(verts)
    pts_out = []
    w_out = []
    for i in range(n):
        tri = np.array([fan, verts[i], verts[(i + 1) % n]])
        area = signed_area(tri)
        if area <= 0.0:
            raise QuadratureError("fan triangulation produced a degenerate triangle")
        pts_out.append(bary @ tri)
        w_out.append(area * wts)
    return QuadratureRule(np.vstack(pts_out), np.concatenate(w_out), degree)
