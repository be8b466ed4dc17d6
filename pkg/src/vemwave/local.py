"""Per-element virtual element machinery for degrees k = 1, 2, 3.

Element degrees of freedom, in local order:

  D1  values at the vertices, counterclockwise;
  D2  values at the k-1 interior Gauss-Lobatto points of each edge,
      edges in counterclockwise order, nodes along each edge;
  D3  scaled moments (1/|E|) int_E v m_a for |a| <= k-2, graded order.

From these the element builds the energy projection Pi^nabla (onto
polynomials, matching gradients plus a degree-dependent average) and
the L2-type projection Pi^0 whose moments up to degree k-2 are exact
and whose top-degree moments are borrowed from Pi^nabla.  Both are
stored as coefficient matrices against the scaled monomial basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    QuadratureRule,
    ScaledMonomialBasis,
    edge_gauss_lobatto,
    edge_rule,
    polygon_quadrature,
    polynomial_space_dim,
)
from .polygons import signed_area

SUPPORTED_DEGREES = (1, 2, 3)


class ElementError(Exception):
    pass


@dataclass(frozen=True)
class LocalDofSet:
    """Layout of one element's degrees of freedom.

    point_dofs stacks the coordinates of all point-valued dofs (D1 then
    D2); moment dofs have no location and are indexed implicitly by the
    first (k-1)k/2 monomials.
    """

    k: int
    n_vertices: int
    vertex_points: np.ndarray
    edge_nodes: list[np.ndarray]
    n_moments: int

    @property
    def n_point_dofs(self) -> int:
        return self.n_vertices * self.k

    @property
    def n_dofs(self) -> int:
        return self.n_point_dofs + self.n_moments

    @property
    def point_dofs(self) -> np.ndarray:
        if self.k == 1:
            return self.vertex_points
        return np.vstack([self.vertex_points] + self.edge_nodes)


def build_dofs(verts: np.ndarray, k: int) -> LocalDofSet:
    """Degree-of-freedom layout for one polygonal element."""
    if k not in SUPPORTED_DEGREES:
        raise ElementError(f"degree must be one of {SUPPORTED_DEGREES}, got {k}")
    verts = np.asarray(verts, dtype=float)
    n = len(verts)
    edge_nodes = []
    if k > 1:
        for j in range(n):
            edge_nodes.append(edge_gauss_lobatto(k, verts[j], verts[(j + 1) % n]))
    return LocalDofSet(k, n, verts, edge_nodes, polynomial_space_dim(k - 2))


@dataclass(frozen=True)
class ProjectorPack:
    """Projection matrices and integration data for one element.

    Attributes
    ----------
    dofs : LocalDofSet
    basis : ScaledMonomialBasis
    quad : QuadratureRule
        Interior rule exact to degree 2k.
    area : float
    D : ndarray, (n_dofs, n_k)
        Dof values of the monomials.
    B, G : ndarray
        Right-hand side and Gram matrix of the energy projection system
        (G has its constant row replaced by the projection average).
    G_tilde : ndarray
        Pure gradient Gram matrix (singular, zero constant row/column).
    H : ndarray
        Mass Gram matrix of the monomials.
    C : ndarray
        Right-hand side of the L2 projection system.
    pi_nabla, pi_zero : ndarray, (n_k, n_dofs)
        Coefficient maps of the two projections.
    """

    dofs: LocalDofSet
    basis: ScaledMonomialBasis
    quad: QuadratureRule
    area: float
    D: np.ndarray
    B: np.ndarray
    G: np.ndarray
    G_tilde: np.ndarray
    H: np.ndarray
    C: np.ndarray
    pi_nabla: np.ndarray
    pi_zero: np.ndarray


def build_projectors(verts: np.ndarray, k: int) -> ProjectorPack:
    """Assemble the projection machinery of one element.

    The boundary integrals in B are evaluated with the (k+1)-point
    Gauss-Lobatto rule per edge, which is exact there because traces of
    the virtual functions are degree-k polynomials sampled at exactly
    those nodes and the normal-derivative factor has degree k-1.
    """
    dofs = build_dofs(verts, k)
    verts = dofs.vertex_points
    area = signed_area(verts)
    if area <= 0.0:
        raise ElementError("element must be counterclockwise with positive area")
    basis = ScaledMonomialBasis.for_polygon(verts, k)
    quad = polygon_quadrature(verts, 2 * k)
    n_k = basis.size
    n_dofs = dofs.n_dofs
    n_e = dofs.n_vertices
    n_mom = dofs.n_moments

    vals_q = basis.values(quad.points)
    grads_q = basis.gradients(quad.points)
    H = vals_q.T @ (quad.weights[:, None] * vals_q)
    H = 0.5 * (H + H.T)
    G_tilde = np.einsum("qad,q,qbd->ab", grads_q, quad.weights, grads_q, optimize=True)
    G_tilde = 0.5 * (G_tilde + G_tilde.T)

    D = np.zeros((n_dofs, n_k))
    D[: dofs.n_point_dofs] = basis.values(dofs.point_dofs)
    if n_mom:
        D[dofs.n_point_dofs :] = H[:n_mom, :] / area

    # boundary term of B: int_dE (dm_a/dn) phi_i ds, one edge at a time
    B = np.zeros((n_k, n_dofs))
    perimeter = 0.0
    boundary_avg = np.zeros(n_dofs)
    for j in range(n_e):
        p0, p1 = verts[j], verts[(j + 1) % n_e]
        nodes, wts = edge_rule(k + 1, p0, p1)
        tangent = p1 - p0
        length = np.linalg.norm(tangent)
        normal = np.array([tangent[1], -tangent[0]]) / length
        # dof ids hit by this edge: start vertex, interior nodes, end vertex
        ids = [j] + [n_e + j * (k - 1) + m for m in range(k - 1)] + [(j + 1) % n_e]
        dn = basis.gradients(nodes) @ normal
        for node, w in enumerate(wts):
            B[:, ids[node]] += w * dn[node]
        perimeter += length
        boundary_avg[ids[0]] += 0.5 * length
        boundary_avg[ids[-1]] += 0.5 * length
    # interior term: - int_E (Delta m_a) phi_i via the moment dofs
    for a in range(n_k):
        for idx, coef in basis.laplacian_in_basis(a):
            B[a, dofs.n_point_dofs + idx] -= coef * area
    # projection average fixing the constant part
    if k == 1:
        B[0] = boundary_avg / perimeter
    else:
        B[0] = 0.0
        B[0, dofs.n_point_dofs] = 1.0

    G = G_tilde.copy()
    if k == 1:
        for j in range(n_e):
            p0, p1 = verts[j], verts[(j + 1) % n_e]
            nodes, wts = edge_rule(k + 1, p0, p1)
            G[0] += basis.values(nodes).T @ wts
        G[0] /= perimeter
    else:
        G[0] = H[0] / area

    try:
        pi_nabla = np.linalg.solve(G, B)
    except np.linalg.LinAlgError as exc:
        raise ElementError(f"energy projection system singular: {exc}")

    C = H @ pi_nabla
    if n_mom:
        C[:n_mom] = 0.0
        C[np.arange(n_mom), dofs.n_point_dofs + np.arange(n_mom)] = area
    pi_zero = np.linalg.solve(H, C)

    return ProjectorPack(dofs, basis, quad, area, D, B, G, G_tilde, H, C, pi_nabla, pi_zero)


def local_stiffness(pack: ProjectorPack, stab_scale: float = 1.0) -> np.ndarray:
    """Element stiffness: projected gradient part plus dof stabilization.

    The stabilization acts on (I - D Pi) with unit scaling, the plain
    dof-matrix choice; stab_scale rescales it.
    """
    consistent = pack.pi_nabla.T @ pack.G_tilde @ pack.pi_nabla
    slack = np.eye(pack.dofs.n_dofs) - pack.D @ pack.pi_nabla
    k_e = 0.5 * (consistent + consistent.T) + stab_scale * (slack.T @ slack)
    return 0.5 * (k_e + k_e.T)


def local_mass(pack: ProjectorPack, mode: str = "stabilized") -> np.ndarray:
    """Element mass matrix.

    "stabilized" adds the area-scaled dof stabilization on the slack of
    the L2 projection; "non_stabilized" keeps only the projected part,
    which is symmetric positive semidefinite with a nontrivial kernel.
    """
    consistent = pack.pi_zero.T @ pack.H @ pack.pi_zero
    m_e = 0.5 * (consistent + consistent.T)
    if mode == "stabilized":
        slack = np.eye(pack.dofs.n_dofs) - pack.D @ pack.pi_zero
        m_e = m_e + pack.area * (slack.T @ slack)
    elif mode != "non_stabilized":
        raise ElementError(f"unknown mass mode {mode!r}")
    return 0.5 * (m_e + m_e.T)


def local_load(pack: ProjectorPack, f_at_quad: np.ndarray) -> np.ndarray:
    """Element load vector for samples of f at pack.quad.points.

    Implements int_E f (Pi^0 phi_i): monomial moments of f first, then
    the transposed projection.
    """
    moments = pack.basis.values(pack.quad.points).T @ (pack.quad.weights * f_at_quad)
    return pack.pi_zero.T @ moments
