"""Generalized eigenpairs of (K, M) and the exact modal solution.

The free system M u'' + K u = b(t) decouples in the M-orthonormal
eigenbasis K w = lambda M w into scalar oscillators with frequencies
mu = sqrt(lambda); each mode evolves by the variation-of-constants
formula, whose convolution integral is evaluated with composite
Simpson quadrature.  This is the reference solution that time-stepping
schemes are measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import DiscreteSystem, DofVector

DENSE_DOF_CAP = 4000


class SpectralError(Exception):
    pass


@dataclass(frozen=True)
class ModalBasis:
    """Eigenpairs of the free block: ascending eigenvalues, frequencies
    mu = sqrt(lambda), and M-orthonormal eigenvector columns."""

    lambdas: np.ndarray
    mus: np.ndarray
    vectors: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.lambdas)


def generalized_eigendecomposition(system: DiscreteSystem, dof_cap: int = DENSE_DOF_CAP) -> ModalBasis:
    """Full dense eigendecomposition of (K_free, M_free).

    Guarded by a dof cap since the decomposition is cubic; beyond the
    cap use the iterative extreme-eigenvalue estimates instead.  The
    mass matrix must be positive definite (stabilized assembly).
    """
    n = system.n_free
    if n > dof_cap:
        raise SpectralError(
            f"{n} free dofs exceed the dense cap {dof_cap}; "
            "use estimate_max_eigenvalue / estimate_min_eigenvalue instead"
        )
    K = system.K_free.toarray()
    M = system.M_free.toarray()
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise SpectralError(
            "mass matrix is not positive definite (non-stabilized assembly); "
            "the eigenproblem is unbounded, use estimate_max_eigenvalue"
        )
    lam, vec = scipy.linalg.eigh(K, M)
    if lam[0] <= 0.0:
        raise SpectralError(f"nonpositive stiffness eigenvalue {lam[0]:.3e}")
    return ModalBasis(lam, np.sqrt(lam), vec)


def modal_solution(
    system: DiscreteSystem,
    basis: ModalBasis,
    u0: DofVector | None,
    z0: DofVector | None,
    load,
    t: float,
    duhamel_step: float | None = None,
) -> tuple[DofVector, DofVector]:
    """Exact solution (up to the convolution quadrature) at time t.

    Each modal coefficient is

        c cos(mu t) + (d / mu) sin(mu t)
          + (1 / mu) int_0^t g(s) sin(mu (t - s)) ds,

    with c, d the M-weighted modal projections of the initial data and
    g(s) the modal load.  The integral uses composite Simpson with step
    at most `duhamel_step` (default: 1/32 of the fastest modal period).
    Returns displacement and velocity.
    """
    if t < 0.0:
        raise SpectralError("time must be nonnegative")
    W = basis.vectors
    M = system.M_free
    c = W.T @ (M @ (u0.free if u0 is not None else np.zeros(system.n_free)))
    d = W.T @ (M @ (z0.free if z0 is not None else np.zeros(system.n_free)))

    mus = basis.mus
    cos_t, sin_t = np.cos(mus * t), np.sin(mus * t)
    coeff_u = c * cos_t + d * sin_t / mus
    coeff_v = -c * mus * sin_t + d * cos_t

    if load is not None and t > 0.0:
        if duhamel_step is None:
            duhamel_step = 2.0 * np.pi / (32.0 * mus.max())
        n_iv = max(2, 2 * int(np.ceil(t / (2.0 * duhamel_step))))
        s = np.linspace(0.0, t, n_iv + 1)
        w = np.ones(n_iv + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= (t / n_iv) / 3.0
        g = np.empty((len(s), basis.n_modes))
        for j, sj in enumerate(s):
            g[j] = W.T @ load(sj)[system.free_index]
        phase = mus[None, :] * (t - s[:, None])
        coeff_u += np.einsum("j,jn->n", w, g * np.sin(phase)) / mus
        coeff_v += np.einsum("j,jn->n", w, g * np.cos(phase))

    return system.from_free(W @ coeff_u), system.from_free(W @ coeff_v)


def dump_eigenvalues_csv(basis: ModalBasis, path: str) -> None:
    """Write index,lambda,mu rows for the whole spectrum."""
    with open(path, "w") as fh:
        fh.write("index,lambda,mu\n")
        for i, (lam, mu) in enumerate(zip(basis.lambdas, basis.mus)):
            fh.write(f"{i},{lam:.17g},{mu:.17g}\n")
