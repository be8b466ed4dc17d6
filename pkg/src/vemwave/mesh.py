"""Polygonal meshes of the unit square: generation, checks, text IO.

Voronoi meshes are produced by mirroring the generators across the four
box edges before calling qhull, which makes the diagram of the original
generators coincide exactly with the box-clipped diagram; Lloyd
iterations then move each generator to its cell centroid.  Meshes are
plain vertex/cell-loop structures with derived edge topology.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import QhullError, Voronoi, cKDTree

from . import polygons

# weld radius for coincident Voronoi vertices (cocircular degeneracies)
MERGE_TOL = 1e-9
SNAP_TOL = 1e-9
AREA_TOL = 1e-9
GENERATOR_RETRIES = 5


class MeshError(Exception):
    pass


class MeshGenerationError(MeshError):
    pass


class MeshValidationError(MeshError):
    def __init__(self, message: str, bad_cells: list[int] | None = None):
        super().__init__(message)
        self.bad_cells = bad_cells or []


class MeshFormatError(MeshError):
    pass


@dataclass
class PolygonalMesh:
    """Conforming polygonal mesh of [0, 1]^2.

    Attributes
    ----------
    vertices : ndarray, shape (n_v, 2)
    cells : list of int ndarrays
        Vertex loops in counterclockwise order.
    boundary_vertex : ndarray of bool, shape (n_v,)
        True for vertices on the domain boundary.
    """

    vertices: np.ndarray
    cells: list[np.ndarray]
    boundary_vertex: np.ndarray

    cell_areas: np.ndarray = field(init=False, repr=False)
    cell_diameters: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.cells = [np.asarray(c, dtype=int) for c in self.cells]
        self.boundary_vertex = np.asarray(self.boundary_vertex, dtype=bool)
        areas = np.empty(len(self.cells))
        diams = np.empty(len(self.cells))
        for i, loop in enumerate(self.cells):
            pts = self.vertices[loop]
            areas[i] = polygons.signed_area(pts)
            diams[i] = polygons.diameter(pts)
        self.cell_areas = areas
        self.cell_diameters = diams
        for arr in (self.vertices, self.boundary_vertex, self.cell_areas, self.cell_diameters):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def h(self) -> float:
        """Largest cell diameter."""
        return float(self.cell_diameters.max())

    @property
    def h_mean(self) -> float:
        return float(self.cell_diameters.mean())

    def cell_points(self, i: int) -> np.ndarray:
        return self.vertices[self.cells[i]]

    def edges(self) -> dict[tuple[int, int], list[int]]:
        """Undirected edge -> incident cell list, keys as sorted pairs."""
        out: dict[tuple[int, int], list[int]] = {}
        for ci, loop in enumerate(self.cells):
            for j in range(len(loop)):
                a, b = int(loop[j]), int(loop[(j + 1) % len(loop)])
                key = (a, b) if a < b else (b, a)
                out.setdefault(key, []).append(ci)
        return out


@dataclass
class MeshQualityReport:
    """Per-cell shape-regularity measurements against thresholds.

    star_ratio is the radius of the largest ball inscribed in the cell
    kernel divided by the cell diameter; gap_ratio is the smallest
    pairwise vertex distance divided by the cell diameter.
    """

    h: float
    h_mean: float
    star_ratio: np.ndarray
    gap_ratio: np.ndarray
    gamma_min: float
    c_min: float

    @property
    def star_pass(self) -> np.ndarray:
        return self.star_ratio >= self.gamma_min

    @property
    def gap_pass(self) -> np.ndarray:
        return self.gap_ratio >= self.c_min

    @property
    def passed(self) -> bool:
        return bool(self.star_pass.all() and self.gap_pass.all())

    def failing_cells(self) -> list[int]:
        bad = ~(self.star_pass & self.gap_pass)
        return [int(i) for i in np.nonzero(bad)[0]]


def generate_grid_mesh(n: int) -> PolygonalMesh:
    """Uniform n x n square mesh of [0, 1]^2."""
    if n < 1:
        raise MeshGenerationError("grid resolution must be at least 1")
    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])
    cells = []
    for iy in range(n):
        for ix in range(n):
            v00 = iy * (n + 1) + ix
            cells.append(np.array([v00, v00 + 1, v00 + n + 2, v00 + n + 1]))
    on_edge = (
        (vertices[:, 0] == 0.0)
        | (vertices[:, 0] == 1.0)
        | (vertices[:, 1] == 0.0)
        | (vertices[:, 1] == 1.0)
    )
    return PolygonalMesh(vertices, cells, on_edge)


def _mirrored(points: np.ndarray) -> np.ndarray:
    """Generators plus their reflections across the four box edges."""
    left = points * [-1.0, 1.0]
    right = points * [-1.0, 1.0] + [2.0, 0.0]
    bottom = points * [1.0, -1.0]
    top = points * [1.0, -1.0] + [0.0, 2.0]
    return np.vstack([points, left, right, bottom, top])


def _clipped_voronoi(points: np.ndarray):
    """Voronoi cells of `points` clipped to the unit square.

    Returns the qhull vertex array and one CCW-ordered loop of vertex
    indices per generator.  Mirroring guarantees every original cell is
    bounded and its boundary edges lie on the box.
    """
    vor = Voronoi(_mirrored(points))
    loops = []
    for i in range(len(points)):
        region = vor.regions[vor.point_region[i]]
        if not region or -1 in region:
            raise MeshGenerationError("unbounded Voronoi cell; generators degenerate")
        loop = np.array(region, dtype=int)
        pts = vor.vertices[loop]
        center = pts.mean(axis=0)
        order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
        loops.append(loop[order])
    return vor.vertices, loops


def _lloyd(points: np.ndarray, iterations: int):
    """Lloyd relaxation toward a centroidal Voronoi tessellation.

    Returns relaxed generators plus per-iteration mean displacement and
    quantization energy histories (used to monitor descent).
    """
    displacement = []
    energy = []
    for _ in range(iterations):
        verts, loops = _clipped_voronoi(points)
        new_points = np.empty_like(points)
        e = 0.0
        for i, loop in enumerate(loops):
            poly = verts[loop]
            _, c = polygons.area_centroid(poly)
            new_points[i] = c
            e += polygons.second_moment_about(poly, points[i])
        displacement.append(float(np.linalg.norm(new_points - points, axis=1).mean()))
        energy.append(e)
        points = new_points
    return points, displacement, energy


def _weld_vertices(verts: np.ndarray, loops: list[np.ndarray]):
    """Merge vertices closer than MERGE_TOL and drop collapsed edges."""
    tree = cKDTree(verts)
    parent = np.arange(len(verts))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in sorted(tree.query_pairs(MERGE_TOL)):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    root = np.array([find(i) for i in range(len(verts))])

    used = sorted({int(root[i]) for loop in loops for i in loop})
    remap = {old: new for new, old in enumerate(used)}
    new_verts = verts[used]
    new_loops = []
    for loop in loops:
        seq = [remap[int(root[i])] for i in loop]
        dedup = [v for j, v in enumerate(seq) if v != seq[(j - 1) % len(seq)]]
        if len(dedup) < 3:
            raise MeshGenerationError("cell collapsed during vertex weld")
        new_loops.append(np.array(dedup, dtype=int))
    return new_verts, new_loops


def generate_voronoi_mesh(n_cells: int, seed: int = 0, lloyd_iters: int = 50) -> PolygonalMesh:
    """Lloyd-relaxed Voronoi mesh of [0, 1]^2 with `n_cells` cells.

    Deterministic for fixed (n_cells, seed, lloyd_iters).  Generators
    start uniformly random; near-coincident generators are retried with
    seed-derived jitter a bounded number of times.
    """
    if n_cells < 1:
        raise MeshGenerationError("n_cells must be positive")
    if n_cells == 1:
        square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        return PolygonalMesh(square, [np.arange(4)], np.ones(4, dtype=bool))

    rng = np.random.default_rng(seed)
    points = rng.random((n_cells, 2))
    for attempt in range(GENERATOR_RETRIES + 1):
        gap = cKDTree(points).query_pairs(1e-9)
        try:
            if gap:
                raise MeshGenerationError("coincident generators")
            relaxed, _, _ = _lloyd(points, lloyd_iters)
            verts, loops = _clipped_voronoi(relaxed)
            break
        except (MeshGenerationError, QhullError):
            if attempt == GENERATOR_RETRIES:
                raise MeshGenerationError(
                    f"generator set for seed {seed} stayed degenerate "
                    f"after {GENERATOR_RETRIES} jitter retries"
                )
            points = points + (rng.random(points.shape) - 0.5) * 1e-6
            points = np.clip(points, 1e-9, 1.0 - 1e-9)

    verts = verts.copy()
    for axis in (0, 1):
        verts[np.abs(verts[:, axis]) < SNAP_TOL, axis] = 0.0
        verts[np.abs(verts[:, axis] - 1.0) < SNAP_TOL, axis] = 1.0
    verts, loops = _weld_vertices(verts, loops)

    for i, loop in enumerate(loops):
        if polygons.signed_area(verts[loop]) < 0.0:
            loops[i] = loop[::-1].copy()

    on_edge = (
        (verts[:, 0] == 0.0)
        | (verts[:, 0] == 1.0)
        | (verts[:, 1] == 0.0)
        | (verts[:, 1] == 1.0)
    )
    mesh = PolygonalMesh(verts, loops, on_edge)
    total = float(mesh.cell_areas.sum())
    if abs(total - 1.0) > 1e-10:
        raise MeshGenerationError(f"clipped cells cover {total:.15f}, not the unit square")
    return mesh


def validate_mesh(mesh: PolygonalMesh, gamma_min: float = 0.01, c_min: float = 0.01) -> MeshQualityReport:
    """Topological checks plus shape-regularity report.

    Raises MeshValidationError naming the offending cells when the mesh
    is not a conforming CCW tiling of the unit square; otherwise returns
    the per-cell star-shape and vertex-separation ratios measured
    against the supplied thresholds.
    """
    bad: dict[int, str] = {}
    for i, loop in enumerate(mesh.cells):
        pts = mesh.vertices[loop]
        if len(loop) < 3:
            bad[i] = "fewer than 3 vertices"
        elif len(np.unique(loop)) != len(loop):
            bad[i] = "repeated vertex in loop"
        elif polygons.signed_area(pts) <= 0.0:
            bad[i] = "not counterclockwise"
        elif not polygons.is_simple(pts):
            bad[i] = "self-intersecting"
    if bad:
        raise MeshValidationError(
            "invalid cells: " + "; ".join(f"{i} ({why})" for i, why in sorted(bad.items())),
            sorted(bad),
        )

    edge_cells = mesh.edges()
    dangling = {
        key: cells for key, cells in edge_cells.items() if len(cells) > 2
    }
    if dangling:
        cells = sorted({c for v in dangling.values() for c in v})
        raise MeshValidationError(
            f"edges shared by more than two cells: {sorted(dangling)}", cells
        )

    # interior edges must be traversed once per direction
    directed: dict[tuple[int, int], list[int]] = {}
    for ci, loop in enumerate(mesh.cells):
        for j in range(len(loop)):
            a, b = int(loop[j]), int(loop[(j + 1) % len(loop)])
            directed.setdefault((a, b), []).append(ci)
    for (a, b), cells in directed.items():
        if len(cells) > 1:
            raise MeshValidationError(
                f"edge ({a},{b}) traversed twice in the same direction", sorted(cells)
            )
        if len(edge_cells[(min(a, b), max(a, b))]) == 2 and (b, a) not in directed:
            raise MeshValidationError(
                f"interior edge ({a},{b}) lacks the opposite orientation", cells
            )

    total = float(mesh.cell_areas.sum())
    if abs(total - 1.0) > AREA_TOL:
        raise MeshValidationError(
            f"cell areas sum to {total:.12f}; overlap or gap in the tiling"
        )

    boundary_edges = [key for key, cells in edge_cells.items() if len(cells) == 1]
    should_flag = np.zeros(mesh.n_vertices, dtype=bool)
    for a, b in boundary_edges:
        should_flag[a] = should_flag[b] = True
    if not np.array_equal(should_flag, mesh.boundary_vertex):
        diff = np.nonzero(should_flag != mesh.boundary_vertex)[0]
        raise MeshValidationError(f"boundary flags disagree at vertices {diff.tolist()}")

    star = np.empty(mesh.n_cells)
    gap = np.empty(mesh.n_cells)
    for i in range(mesh.n_cells):
        pts = mesh.cell_points(i)
        _, radius = polygons.kernel_chebyshev(pts)
        star[i] = max(radius, 0.0) / mesh.cell_diameters[i]
        gap[i] = polygons.min_vertex_gap(pts) / mesh.cell_diameters[i]
    report = MeshQualityReport(mesh.h, mesh.h_mean, star, gap, gamma_min, c_min)
    if not report.passed:
        warnings.warn(
            f"mesh quality below thresholds in cells {report.failing_cells()}",
            stacklevel=2,
        )
    return report


def write_mesh(mesh: PolygonalMesh, path: str) -> None:
    """Serialize a mesh to the plain-text exchange format.

    Line 1: ``nv nc``; nv coordinate lines ``x y``; nc cell lines
    ``m i1 ... im`` (CCW, zero-based); nv boundary-flag lines (0/1).
    Coordinates carry 17 significant digits so round-trips are exact.
    """
    lines = [f"{mesh.n_vertices} {mesh.n_cells}"]
    for x, y in mesh.vertices:
        lines.append(f"{x:.17g} {y:.17g}")
    for loop in mesh.cells:
        lines.append(" ".join([str(len(loop))] + [str(int(v)) for v in loop]))
    for flag in mesh.boundary_vertex:
        lines.append("1" if flag else "0")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path: str) -> PolygonalMesh:
    """Parse the plain-text mesh format; errors name the offending line."""
    with open(path) as fh:
        raw = fh.read().splitlines()

    def fail(lineno: int, why: str):
        raise MeshFormatError(f"{path}:{lineno}: {why}")

    if not raw:
        fail(1, "empty file")
    head = raw[0].split()
    if len(head) != 2:
        fail(1, "expected 'n_vertices n_cells'")
    try:
        nv, nc = int(head[0]), int(head[1])
    except ValueError:
        fail(1, "counts must be integers")
    if len(raw) < 1 + nv + nc + nv:
        fail(len(raw), f"expected {1 + 2 * nv + nc} lines, found {len(raw)}")

    vertices = np.empty((nv, 2))
    for i in range(nv):
        lineno = 2 + i
        parts = raw[1 + i].split()
        if len(parts) != 2:
            fail(lineno, "expected two coordinates")
        try:
            vertices[i] = [float(parts[0]), float(parts[1])]
        except ValueError:
            fail(lineno, "coordinates must be numeric")

    cells = []
    for c in range(nc):
        lineno = 2 + nv + c
        parts = raw[1 + nv + c].split()
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            fail(lineno, "cell line must be integers")
        if not vals or len(vals) != vals[0] + 1:
            fail(lineno, "cell line must read 'm i1 ... im'")
        loop = vals[1:]
        for v in loop:
            if not 0 <= v < nv:
                fail(lineno, f"vertex index {v} out of range [0, {nv})")
        cells.append(np.array(loop, dtype=int))

    flags = np.empty(nv, dtype=bool)
    for i in range(nv):
        lineno = 2 + nv + nc + i
        val = raw[1 + nv + nc + i].strip()
        if val not in ("0", "1"):
            fail(lineno, "boundary flag must be 0 or 1")
        flags[i] = val == "1"
    return PolygonalMesh(vertices, cells, flags)
