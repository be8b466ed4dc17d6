import numpy as np
import pytest

from vemwave.mesh import generate_grid_mesh, generate_voronoi_mesh

# Reference polygons reused across the local-space tests: unit square,
# right triangle, irregular pentagon, and a non-convex L-shaped hexagon
# whose kernel is the unit square [0,1]^2.
SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
PENTAGON = np.array(
    [[0.0, 0.0], [0.9, -0.1], [1.3, 0.7], [0.5, 1.2], [-0.2, 0.6]]
)
LSHAPE = np.array(
    [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]
)


@pytest.fixture(scope="session")
def small_voronoi():
    return generate_voronoi_mesh(25, seed=42, lloyd_iters=20)


@pytest.fixture(scope="session")
def grid4():
    return generate_grid_mesh(4)


@pytest.fixture(scope="session")
def grid10():
    return generate_grid_mesh(10)
