"""Virtual element solver for the 2D linear wave equation on polygons."""

from .assembly import (
    DiscreteSystem,
    DofVector,
    assemble,
    discrete_norms,
    interpolate,
    load_vector,
)
from .geometry import (
    QuadratureRule,
    ScaledMonomialBasis,
    edge_gauss_lobatto,
    monomial_eval,
    polygon_quadrature,
)
from .integrators import (
    EigenEstimate,
    NewmarkParams,
    Trajectory,
    WaveState,
    bathe_amplification,
    discrete_energy,
    estimate_max_eigenvalue,
    estimate_min_eigenvalue,
    newmark_amplification,
    run_bathe,
    run_newmark,
    stability_limit,
)
from .local import LocalDofSet, ProjectorPack, build_dofs, build_projectors, local_load, local_mass, local_stiffness
from .mesh import (
    MeshQualityReport,
    PolygonalMesh,
    generate_grid_mesh,
    generate_voronoi_mesh,
    read_mesh,
    validate_mesh,
    write_mesh,
)
from .spectral import ModalBasis, generalized_eigendecomposition, modal_solution

__version__ = "0.1.0"

__all__ = [
    "DiscreteSystem",
    "DofVector",
    "EigenEstimate",
    "LocalDofSet",
    "MeshQualityReport",
    "ModalBasis",
    "NewmarkParams",
    "PolygonalMesh",
    "ProjectorPack",
    "QuadratureRule",
    "ScaledMonomialBasis",
    "Trajectory",
    "WaveState",
    "assemble",
    "bathe_amplification",
    "build_dofs",
    "build_projectors",
    "discrete_energy",
    "discrete_norms",
    "edge_gauss_lobatto",
    "estimate_max_eigenvalue",
    "estimate_min_eigenvalue",
    "generalized_eigendecomposition",
    "generate_grid_mesh",
    "generate_voronoi_mesh",
    "interpolate",
    "load_vector",
    "local_load",
    "local_mass",
    "local_stiffness",
    "modal_solution",
    "monomial_eval",
    "newmark_amplification",
    "polygon_quadrature",
    "read_mesh",
    "run_bathe",
    "run_newmark",
    "stability_limit",
    "validate_mesh",
    "write_mesh",
]
