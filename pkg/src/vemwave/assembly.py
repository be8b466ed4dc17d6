"""Global assembly of the virtual element wave system.

Global dof numbering: vertex dofs first (mesh vertex order), then k-1
dofs per undirected edge (edges sorted by their vertex pair, nodes
ordered from the lower- to the higher-indexed vertex), then k(k-1)/2
moment dofs per cell.  Homogeneous Dirichlet conditions are imposed by
eliminating the boundary rows and columns; the full matrices are kept
alongside the free blocks because discrete norms are quadratic forms
over all dofs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .local import ProjectorPack, build_projectors, local_load, local_mass, local_stiffness
from .mesh import PolygonalMesh

BOUNDARY_DATA_TOL = 1e-10


class AssemblyError(Exception):
    pass


@dataclass(frozen=True)
class DofVector:
    """Coefficient vector over all dofs with a free-dof view.

    Wave solutions live in the space with zero boundary values, where
    the boundary entries vanish; interpolants of functions that do not
    vanish on the boundary keep their boundary values here.
    """

    full: np.ndarray
    free_index: np.ndarray

    @property
    def free(self) -> np.ndarray:
        return self.full[self.free_index]


@dataclass
class DiscreteSystem:
    """Assembled mass/stiffness pair with elimination bookkeeping.

    K and M are the full symmetric matrices in compressed sparse column
    form with sorted indices; K_free / M_free are their restrictions to
    the non-boundary dofs.  cell_dofs maps each element's local dof
    order to global indices, and packs holds the per-element projector
    data for interpolation, loads and postprocessing.
    """

    mesh: PolygonalMesh
    k: int
    mass_mode: str
    stab_scale: float
    K: sp.csc_matrix
    M: sp.csc_matrix
    packs: list[ProjectorPack]
    cell_dofs: list[np.ndarray]
    boundary_mask: np.ndarray
    dof_points: np.ndarray

    free_index: np.ndarray = field(init=False)
    fixed_index: np.ndarray = field(init=False)
    K_free: sp.csc_matrix = field(init=False, repr=False)
    M_free: sp.csc_matrix = field(init=False, repr=False)

    def __post_init__(self):
        self.free_index = np.nonzero(~self.boundary_mask)[0]
        self.fixed_index = np.nonzero(self.boundary_mask)[0]
        self.K_free = self.K[self.free_index][:, self.free_index].tocsc()
        self.M_free = self.M[self.free_index][:, self.free_index].tocsc()
        self.K_free.sort_indices()
        self.M_free.sort_indices()

    @property
    def n_dofs(self) -> int:
        return self.K.shape[0]

    @property
    def n_free(self) -> int:
        return len(self.free_index)

    def vector(self, full: np.ndarray | None = None) -> DofVector:
        if full is None:
            full = np.zeros(self.n_dofs)
        full = np.asarray(full, dtype=float)
        if full.shape != (self.n_dofs,):
            raise AssemblyError(f"expected a vector of length {self.n_dofs}")
        return DofVector(full, self.free_index)

    def from_free(self, free: np.ndarray, boundary: np.ndarray | None = None) -> DofVector:
        full = np.zeros(self.n_dofs)
        full[self.free_index] = free
        if boundary is not None:
            full[self.fixed_index] = boundary
        return DofVector(full, self.free_index)


def _edge_numbering(mesh: PolygonalMesh) -> dict[tuple[int, int], int]:
    keys = sorted(mesh.edges().keys())
    return {key: i for i, key in enumerate(keys)}


def _cell_dof_map(mesh, k, edge_ids, n_edges):
    """Local-to-global index arrays, one per cell."""
    nv = mesh.n_vertices
    n_mom = k * (k - 1) // 2
    out = []
    for ci, loop in enumerate(mesh.cells):
        n = len(loop)
        ids = np.empty(n * k + n_mom, dtype=int)
        ids[:n] = loop
        if k > 1:
            for j in range(n):
                a, b = int(loop[j]), int(loop[(j + 1) % n])
                e = edge_ids[(a, b) if a < b else (b, a)]
                base = nv + e * (k - 1)
                slots = np.arange(k - 1)
                if a > b:
                    # edge traversed against its global orientation
                    slots = slots[::-1]
                ids[n + j * (k - 1) : n + (j + 1) * (k - 1)] = base + slots
        if n_mom:
            start = nv + n_edges * (k - 1) + ci * n_mom
            ids[n * k :] = start + np.arange(n_mom)
        out.append(ids)
    return out


def assemble(
    mesh: PolygonalMesh,
    k: int,
    mass_mode: str = "stabilized",
    stab_scale: float = 1.0,
) -> DiscreteSystem:
    """Build the global stiffness and mass matrices for degree k.

    Cells are visited in index order and scattered into one coordinate
    buffer, so repeated assembly of the same mesh is bit-identical.
    """
    edge_ids = _edge_numbering(mesh)
    n_edges = len(edge_ids)
    edge_cells = mesh.edges()
    nv = mesh.n_vertices
    n_mom = k * (k - 1) // 2
    n_dofs = nv * 1 + n_edges * (k - 1) + mesh.n_cells * n_mom
    cell_dofs = _cell_dof_map(mesh, k, edge_ids, n_edges)

    boundary = np.zeros(n_dofs, dtype=bool)
    boundary[:nv] = mesh.boundary_vertex
    dof_points = np.full((n_dofs, 2), np.nan)
    dof_points[:nv] = mesh.vertices

    packs = []
    total = sum(len(ids) ** 2 for ids in cell_dofs)
    rows = np.empty(total, dtype=np.int64)
    cols = np.empty(total, dtype=np.int64)
    k_vals = np.empty(total)
    m_vals = np.empty(total)
    pos = 0
    for ci, loop in enumerate(mesh.cells):
        verts = mesh.vertices[loop]
        try:
            pack = build_projectors(verts, k)
        except Exception as exc:
            raise AssemblyError(f"cell {ci}: {exc}") from exc
        packs.append(pack)
        k_e = local_stiffness(pack, stab_scale)
        m_e = local_mass(pack, mass_mode)
        ids = cell_dofs[ci]
        n_loc = len(ids)
        grid_r, grid_c = np.meshgrid(ids, ids, indexing="ij")
        rows[pos : pos + n_loc ** 2] = grid_r.ravel()
        cols[pos : pos + n_loc ** 2] = grid_c.ravel()
        k_vals[pos : pos + n_loc ** 2] = k_e.ravel()
        m_vals[pos : pos + n_loc ** 2] = m_e.ravel()
        pos += n_loc ** 2
        if k > 1:
            dof_points[ids[len(loop) : len(loop) * k]] = np.vstack(pack.dofs.edge_nodes)

    if k > 1:
        for (a, b), cells in edge_cells.items():
            if len(cells) == 1:
                e = edge_ids[(a, b)]
                boundary[nv + e * (k - 1) : nv + (e + 1) * (k - 1)] = True

    shape = (n_dofs, n_dofs)
    K = sp.coo_matrix((k_vals, (rows, cols)), shape=shape).tocsc()
    M = sp.coo_matrix((m_vals, (rows, cols)), shape=shape).tocsc()
    K.sort_indices()
    M.sort_indices()
    return DiscreteSystem(
        mesh, k, mass_mode, stab_scale, K, M, packs, cell_dofs, boundary, dof_points
    )


def load_vector(system: DiscreteSystem, f) -> np.ndarray:
    """Assemble the full load vector of int f (Pi^0 phi_i).

    f maps an (m, 2) point array to m values; time dependence is the
    caller's business (bind t before passing f in).
    """
    b = np.zeros(system.n_dofs)
    for pack, ids in zip(system.packs, system.cell_dofs):
        b[ids] += local_load(pack, np.asarray(f(pack.quad.points), dtype=float))
    return b


def interpolate(system: DiscreteSystem, u) -> DofVector:
    """Dof interpolant of a function: point values plus cell moments.

    Warns when the boundary values exceed BOUNDARY_DATA_TOL, since the
    wave problem is posed with zero boundary data; the values are kept,
    which is what a lifted run wants.
    """
    vals = np.zeros(system.n_dofs)
    seen = np.zeros(system.n_dofs, dtype=bool)
    for pack, ids in zip(system.packs, system.cell_dofs):
        n_pt = pack.dofs.n_point_dofs
        point_ids = ids[:n_pt]
        new = ~seen[point_ids]
        if new.any():
            pts = pack.dofs.point_dofs[new]
            vals[point_ids[new]] = u(pts)
            seen[point_ids[new]] = True
        if pack.dofs.n_moments:
            uq = np.asarray(u(pack.quad.points), dtype=float)
            mom = pack.basis.values(pack.quad.points)[:, : pack.dofs.n_moments]
            vals[ids[n_pt:]] = (pack.quad.weights * uq) @ mom / pack.area
    worst = np.abs(vals[system.fixed_index]).max() if len(system.fixed_index) else 0.0
    if worst > BOUNDARY_DATA_TOL:
        warnings.warn(
            f"interpolant has boundary values up to {worst:.3e}; "
            "the wave problem assumes zero boundary data",
            stacklevel=2,
        )
    return system.vector(vals)


def discrete_norms(system: DiscreteSystem, v: DofVector) -> tuple[float, float]:
    """Mesh-dependent energy seminorm and L2-type norm of a dof vector.

    Quadratic forms against the full K and M (stabilized M even when
    the system itself was assembled without mass stabilization, so the
    norm stays a norm).
    """
    full = v.full
    if system.mass_mode == "stabilized":
        m_quad = float(full @ (system.M @ full))
    else:
        m_quad = 0.0
        for pack, ids in zip(system.packs, system.cell_dofs):
            m_quad += float(full[ids] @ (local_mass(pack, "stabilized") @ full[ids]))
    k_quad = float(full @ (system.K @ full))
    for name, q in (("energy", k_quad), ("mass", m_quad)):
        if q < -1e-10:
            raise AssemblyError(f"{name} quadratic form is negative: {q:.3e}")
    return float(np.sqrt(max(k_quad, 0.0))), float(np.sqrt(max(m_quad, 0.0)))
