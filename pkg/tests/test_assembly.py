import warnings

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh, spsolve

from vemwave.assembly import (
    AssemblyError,
    assemble,
    discrete_norms,
    interpolate,
    load_vector,
)
from vemwave.geometry import polygon_quadrature


def test_global_dof_count_quadratic_grid(grid4):
    system = assemble(grid4, k=2)
    # 25 vertices + 40 edges + 16 cell moments
    assert system.n_dofs == 81
    assert system.n_free == 49


def test_boundary_mask_quadratic_grid(grid4):
    system = assemble(grid4, k=2)
    # 16 boundary vertices and 16 boundary-edge nodes
    assert int(system.boundary_mask.sum()) == 32
    pts = system.dof_points[system.boundary_mask]
    on_edge = (
        np.isclose(pts[:, 0], 0.0)
        | np.isclose(pts[:, 0], 1.0)
        | np.isclose(pts[:, 1], 0.0)
        | np.isclose(pts[:, 1], 1.0)
    )
    assert on_edge.all()


@pytest.mark.parametrize("k", [1, 2, 3])
def test_global_matrices_symmetric(small_voronoi, k):
    system = assemble(small_voronoi, k=k)
    assert (system.K != system.K.T).nnz == 0
    assert (system.M != system.M.T).nnz == 0


def test_dirichlet_stiffness_positive_definite(small_voronoi):
    system = assemble(small_voronoi, k=2)
    smallest = eigsh(system.K_free, k=1, which="SA", return_eigenvectors=False)
    assert smallest[0] > 0.0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_static_solve_reproduces_polynomials(small_voronoi, k):
    # -Laplace u = f with polynomial u: the discrete solution with
    # lifted boundary values recovers the interpolant to near machine
    polys = {
        1: (lambda p: 1.0 + 2.0 * p[:, 0] - 0.5 * p[:, 1], lambda p: np.zeros(len(p))),
        2: (
            lambda p: p[:, 0] ** 2 + 2.0 * p[:, 0] * p[:, 1] + 3.0 * p[:, 1] ** 2 - p[:, 0],
            lambda p: np.full(len(p), -8.0),
        ),
        3: (
            lambda p: p[:, 0] ** 3 + p[:, 0] ** 2 * p[:, 1] - p[:, 1] ** 3 + p[:, 0] * p[:, 1],
            lambda p: -(6.0 * p[:, 0] + 2.0 * p[:, 1] - 6.0 * p[:, 1]),
        ),
    }
    u_exact, f = polys[k]
    system = assemble(small_voronoi, k=k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u_i = interpolate(system, u_exact)
    b = load_vector(system, f)
    lift = system.K[system.free_index][:, system.fixed_index] @ u_i.full[system.fixed_index]
    u_free = spsolve(system.K_free, b[system.free_index] - lift)
    err = system.from_free(u_free, boundary=u_i.full[system.fixed_index])
    diff = system.vector(err.full - u_i.full)
    e1, e0 = discrete_norms(system, diff)
    assert e1 <= 1e-10
    assert e0 <= 1e-10


@pytest.mark.parametrize("k", [1, 2, 3])
def test_interpolant_energy_matches_quadrature(small_voronoi, k):
    # |u_I|_K^2 equals int |grad u|^2 for polynomial u of degree <= k
    def u(p):
        return (p[:, 0] + 0.5 * p[:, 1]) ** k / (2.0**k)

    system = assemble(small_voronoi, k=k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u_i = interpolate(system, u)
    e1, e0 = discrete_norms(system, u_i)
    grad_sq = 0.0
    u_sq = 0.0
    for i in range(small_voronoi.n_cells):
        quad = polygon_quadrature(small_voronoi.cell_points(i), 2 * k)
        eps = 1e-6
        dx = (
            u(quad.points + np.array([eps, 0.0])) - u(quad.points - np.array([eps, 0.0]))
        ) / (2 * eps)
        dy = (
            u(quad.points + np.array([0.0, eps])) - u(quad.points - np.array([0.0, eps]))
        ) / (2 * eps)
        grad_sq += (quad.weights * (dx**2 + dy**2)).sum()
        u_sq += (quad.weights * u(quad.points) ** 2).sum()
    assert e1**2 == pytest.approx(grad_sq, rel=1e-5)
    assert e0**2 == pytest.approx(u_sq, rel=1e-5)


def test_mass_stabilization_only_adds_energy(small_voronoi):
    stab = assemble(small_voronoi, k=2, mass_mode="stabilized")
    nostab = assemble(small_voronoi, k=2, mass_mode="non_stabilized")
    diff = (stab.M - nostab.M).toarray()
    ew = np.linalg.eigvalsh(0.5 * (diff + diff.T))
    assert ew.min() >= -1e-12 * max(1.0, ew.max())
    # stiffness is identical between the two modes
    assert (stab.K != nostab.K).nnz == 0


def test_load_vector_is_linear(small_voronoi):
    system = assemble(small_voronoi, k=2)
    f1 = lambda p: p[:, 0]
    f2 = lambda p: np.sin(p[:, 1])
    b1 = load_vector(system, f1)
    b2 = load_vector(system, f2)
    b12 = load_vector(system, lambda p: f1(p) + 2.0 * f2(p))
    assert b12 == pytest.approx(b1 + 2.0 * b2, abs=1e-14)
    assert load_vector(system, lambda p: np.zeros(len(p))) == pytest.approx(
        np.zeros(system.n_dofs), abs=0.0
    )


def test_vector_shape_guard(small_voronoi):
    system = assemble(small_voronoi, k=1)
    with pytest.raises(AssemblyError):
        system.vector(np.zeros(3))


def test_interpolate_warns_on_nonzero_boundary(small_voronoi):
    system = assemble(small_voronoi, k=1)
    with pytest.warns(UserWarning):
        interpolate(system, lambda p: np.ones(len(p)))
