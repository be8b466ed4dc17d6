"""Time integration of the semidiscrete wave system M u'' + K u = b(t).

Two schemes are provided: the Newmark family (gamma >= 1/2, beta >= 0),
run in acceleration form with a single factorization of M + beta tau^2 K,
and the composite Bathe scheme, a trapezoidal half step followed by a
three-point backward step, with one factorization per substep matrix.
Runs with a singular (non-stabilized) mass matrix avoid solves with M
by using the equivalent displacement-only three-level recursion, at the
price of not tracking velocities.

Boundary dofs are held at their initial values (zero for the wave
problem; constant lifts are allowed), and the free equations see the
load shifted by -K[free, fixed] u_fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import DiscreteSystem, DofVector

DEFAULT_CFL_MARGIN = 0.05
# Condition-number ceiling for trusting generalized eigenvalues of
# (K, M).  Stabilized mass matrices stay below ~1e4 on unit-square
# meshes and a non-stabilized k=1 mass plateaus around the same level,
# while for k >= 2 the cell-moment dofs let local rank deficiency
# survive assembly and cond(M) grows without bound under refinement
# (measured 1e8..1e12 on the study meshes).  1e7 separates the two
# regimes by several orders either way.
_SINGULAR_COND = 1e7


class IntegrationError(Exception):
    pass


class CflError(IntegrationError):
    """Requested step exceeds the stability limit of an explicit run."""


class EigenIterationError(IntegrationError):
    def __init__(self, message: str, last_value: float):
        super().__init__(message)
        self.last_value = last_value


@dataclass(frozen=True)
class NewmarkParams:
    """Newmark coefficients; gamma = 1/2 is the second-order family."""

    beta: float
    gamma: float = 0.5
    tau: float = 0.01

    def __post_init__(self):
        if self.gamma < 0.5:
            raise IntegrationError("gamma < 1/2 is unconditionally unstable")
        if self.beta < 0.0:
            raise IntegrationError("beta must be nonnegative")
        if self.tau <= 0.0:
            raise IntegrationError("tau must be positive")

    @property
    def unconditionally_stable(self) -> bool:
        return 2.0 * self.beta >= self.gamma


@dataclass(frozen=True)
class WaveState:
    """One snapshot of the discrete wave: displacement, velocity,
    acceleration (None when the scheme does not carry them), time and
    step counter."""

    u: DofVector
    z: DofVector | None
    a: DofVector | None
    t: float
    step: int


@dataclass
class Trajectory:
    """Recorded snapshots of one run plus scheme metadata."""

    states: list[WaveState] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> WaveState:
        return self.states[-1]

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


@dataclass(frozen=True)
class EigenEstimate:
    """Result of a Krylov-free extreme eigenvalue estimate.

    `unbounded` marks a numerically singular mass matrix, where the
    largest generalized eigenvalue escapes to infinity.
    """

    value: float
    iterations: int
    unbounded: bool = False


def stability_limit(beta: float, gamma: float = 0.5) -> float:
    """Largest stable lambda tau^2 for Newmark; inf when unconditional.

    At gamma = 1/2 this is the classical 4 / (1 - 4 beta) bound.
    """
    if 2.0 * beta >= gamma:
        return np.inf
    return 1.0 / (0.5 * gamma - beta)


def newmark_amplification(omega_tau: float, beta: float, gamma: float = 0.5) -> np.ndarray:
    """Exact single-dof Newmark update matrix on the state (u, tau z).

    Stepping the scalar oscillator u'' + omega^2 u = 0; the spectral
    radius of this matrix decides stability at omega tau.
    """
    w2 = omega_tau ** 2
    den = 1.0 + beta * w2
    a11 = (1.0 - (0.5 - beta) * w2) / den
    a12 = 1.0 / den
    a21 = -w2 * (gamma * a11 + (1.0 - gamma))
    a22 = 1.0 - w2 * gamma * a12
    return np.array([[a11, a12], [a21, a22]])


def bathe_amplification(omega_tau: float) -> np.ndarray:
    """Exact single-dof composite-Bathe update matrix on (u, tau z)."""
    w2 = omega_tau ** 2
    # trapezoidal over half a step
    den1 = 1.0 + w2 / 16.0
    b11 = (1.0 - w2 / 16.0) / den1
    b12 = 0.5 / den1
    b21 = -0.5 * w2 * (b11 + 1.0) / 2.0
    b22 = 1.0 - 0.25 * w2 * b12
    half = np.array([[b11, b12], [b21, b22]])
    # three-point backward over the whole step using (u_n, u_half)
    den2 = 9.0 + w2
    full = np.zeros((2, 2))
    # u+ = (12 u_h - 3 u + 4 tau z_h - tau z) / (9 + w2)
    cu = (12.0 * half[0] + 4.0 * half[1] - np.array([3.0, 1.0])) / den2
    full[0] = cu
    # tau z+ = u - 4 u_h + 3 u+
    full[1] = np.array([1.0, 0.0]) - 4.0 * half[0] + 3.0 * cu
    return full


def spectral_radius(a: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(a)).max())


def _power_iterate(apply_op, n: int, rtol: float, maxiter: int):
    """Power iteration with an Aitken-style stopping estimate."""
    rng = np.random.default_rng(1234)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    theta_prev = 0.0
    diff_prev = None
    for it in range(1, maxiter + 1):
        y = apply_op(x)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            return np.inf, it, False
        x = y / ny
        theta = float(ny)
        diff = abs(theta - theta_prev)
        if diff_prev is not None and diff_prev > 0.0 and diff < diff_prev:
            ratio = diff / diff_prev
            err_est = diff * ratio / max(1.0 - ratio, 1e-3)
            if err_est <= rtol * abs(theta):
                return theta, it, True
        elif diff <= rtol * abs(theta) * 1e-3:
            return theta, it, True
        theta_prev, diff_prev = theta, diff
    return theta_prev, maxiter, False


def estimate_max_eigenvalue(
    system: DiscreteSystem, rtol: float = 1e-6, maxiter: int = 50000
) -> EigenEstimate:
    """Largest generalized eigenvalue of (K_free, M_free) by power
    iteration on M^-1 K.

    With a non-stabilized mass matrix the factorization may fail or the
    mass condition number may pass the trust ceiling; both cases are
    reported as `unbounded` instead of a value, since the top of the
    generalized spectrum is then a numerical artifact.
    """
    K, M = system.K_free, system.M_free
    n = K.shape[0]
    try:
        m_lu = splu(M.tocsc())
    except RuntimeError:
        return EigenEstimate(np.inf, 0, unbounded=True)

    if system.mass_mode == "non_stabilized":
        m_hi, _, _ = _power_iterate(lambda v: M @ v, n, 1e-4, 2000)
        m_lo_inv, _, _ = _power_iterate(lambda v: m_lu.solve(v), n, 1e-4, 2000)
        if not np.isfinite(m_lo_inv) or m_hi * m_lo_inv > _SINGULAR_COND:
            return EigenEstimate(np.inf, 0, unbounded=True)

    value, its, ok = _power_iterate(lambda v: m_lu.solve(K @ v), n, rtol, maxiter)
    if not np.isfinite(value):
        return EigenEstimate(np.inf, its, unbounded=True)
    if not ok:
        raise EigenIterationError(
            f"power iteration did not reach rtol={rtol} in {maxiter} iterations "
            f"(last value {value:.6e})",
            value,
        )
    return EigenEstimate(value, its)


def estimate_min_eigenvalue(
    system: DiscreteSystem, rtol: float = 1e-8, maxiter: int = 50000
) -> EigenEstimate:
    """Smallest generalized eigenvalue of (K_free, M_free) by inverse
    iteration (power iteration on K^-1 M)."""
    K, M = system.K_free, system.M_free
    k_lu = splu(K.tocsc())
    inv_value, its, ok = _power_iterate(lambda v: k_lu.solve(M @ v), K.shape[0], rtol, maxiter)
    if not ok:
        raise EigenIterationError(
            f"inverse iteration did not converge in {maxiter} iterations", inv_value
        )
    return EigenEstimate(1.0 / inv_value, its)


def _prepare_run(system, u0, z0, load, want_z=True):
    """Common setup: initial vectors, boundary lift, shifted load."""
    if u0 is None:
        u0 = system.vector()
    if z0 is None:
        z0 = system.vector()
    fixed = system.fixed_index
    u_b = u0.full[fixed]
    if len(fixed) and np.abs(z0.full[fixed]).max() > 0.0:
        raise IntegrationError("boundary velocities must vanish (constant lift only)")
    if len(fixed):
        shift = system.K[system.free_index][:, fixed] @ u_b
    else:
        shift = np.zeros(system.n_free)

    if load is None:
        def rhs(t):
            return -shift
    else:
        def rhs(t):
            return load(t)[system.free_index] - shift

    return u0.free.copy(), z0.free.copy(), u_b, rhs


def _check_cfl(system, params: NewmarkParams, epsilon: float):
    if params.unconditionally_stable:
        return None
    est = estimate_max_eigenvalue(system)
    if est.unbounded:
        raise CflError(
            "conditionally stable scheme with an unbounded spectrum: "
            "the non-stabilized mass matrix is numerically singular"
        )
    lam_tau2 = est.value * params.tau ** 2
    limit = (1.0 - epsilon) * stability_limit(params.beta, params.gamma)
    if lam_tau2 > limit:
        raise CflError(
            f"lambda_max tau^2 = {lam_tau2:.4e} exceeds the stability margin "
            f"{limit:.4e} (beta={params.beta}, gamma={params.gamma}, "
            f"epsilon={epsilon})"
        )
    return est.value


def _step_count(t_end: float, tau: float) -> int:
    n = int(round(t_end / tau))
    if n < 1 or abs(n * tau - t_end) > 1e-9 * max(t_end, 1.0):
        raise IntegrationError(f"tau={tau} does not divide t_end={t_end}")
    return n


def _want_snapshot(t, snapshot_times, tau):
    return any(abs(t - s) <= 1e-9 * max(1.0, abs(s)) for s in snapshot_times)


def run_newmark(
    system: DiscreteSystem,
    params: NewmarkParams,
    u0: DofVector | None = None,
    z0: DofVector | None = None,
    load=None,
    t_end: float = 1.0,
    snapshot_times=(),
    epsilon: float = DEFAULT_CFL_MARGIN,
    check_cfl: bool = True,
) -> Trajectory:
    """Integrate with the Newmark scheme from t = 0 to t_end.

    `load` maps a time to the full assembled load vector.  Snapshots are
    recorded at the requested times plus the final one.  The step must
    divide t_end; conditionally stable parameter choices are verified
    against the estimated spectrum with margin epsilon unless disabled.
    """
    tau = params.tau
    n_steps = _step_count(t_end, tau)
    lam = _check_cfl(system, params, epsilon) if check_cfl else None
    meta = {
        "scheme": "newmark",
        "beta": params.beta,
        "gamma": params.gamma,
        "tau": tau,
        "epsilon": epsilon,
        "lambda_max": lam,
        "mass_mode": system.mass_mode,
    }
    if system.mass_mode == "non_stabilized":
        return _run_newmark_displacement(system, params, u0, z0, load, t_end, snapshot_times, meta)

    u, z, u_b, rhs = _prepare_run(system, u0, z0, load)
    M, K = system.M_free, system.K_free
    m_lu = splu(M.tocsc())
    a = m_lu.solve(rhs(0.0) - K @ u)
    lhs = m_lu if params.beta == 0.0 else splu((M + params.beta * tau ** 2 * K).tocsc())

    traj = Trajectory(meta=meta)

    def record(t, step, u, z, a):
        traj.states.append(
            WaveState(
                system.from_free(u.copy(), u_b),
                system.from_free(z.copy()),
                system.from_free(a.copy()),
                t,
                step,
            )
        )

    record(0.0, 0, u, z, a)
    beta, gamma = params.beta, params.gamma
    for n in range(n_steps):
        t_next = (n + 1) * tau
        predictor = u + tau * z + tau ** 2 * (0.5 - beta) * a
        if beta == 0.0:
            u_next = predictor
            a_next = m_lu.solve(rhs(t_next) - K @ u_next)
        else:
            u_next = lhs.solve(M @ predictor + beta * tau ** 2 * rhs(t_next))
            a_next = (u_next - predictor) / (beta * tau ** 2)
        z = z + tau * ((1.0 - gamma) * a + gamma * a_next)
        u, a = u_next, a_next
        if n + 1 == n_steps or _want_snapshot(t_next, snapshot_times, tau):
            record(t_next, n + 1, u, z, a)
    return traj


def _run_newmark_displacement(system, params, u0, z0, load, t_end, snapshot_times, meta):
    """Three-level displacement recursion: no solves with M.

    Velocities and accelerations are not defined when M is singular, so
    snapshots carry u only.
    """
    tau = params.tau
    n_steps = _step_count(t_end, tau)
    beta, gamma = params.beta, params.gamma
    u_prev, z_init, u_b, rhs = _prepare_run(system, u0, z0, load)
    M, K = system.M_free, system.K_free
    lhs = splu((M + beta * tau ** 2 * K).tocsc())

    traj = Trajectory(meta=meta)

    def record(t, step, u):
        traj.states.append(WaveState(system.from_free(u.copy(), u_b), None, None, t, step))

    record(0.0, 0, u_prev)
    b_prev = rhs(0.0)
    b_curr = rhs(tau)
    u_curr = lhs.solve(
        M @ (u_prev + tau * z_init)
        - tau ** 2 * (0.5 - beta) * (K @ u_prev)
        + tau ** 2 * (beta * b_curr + (0.5 - beta) * b_prev)
    )
    if n_steps == 1 or _want_snapshot(tau, snapshot_times, tau):
        record(tau, 1, u_curr)
    c1 = 0.5 - 2.0 * beta + gamma
    c0 = 0.5 + beta - gamma
    for n in range(1, n_steps):
        t_next = (n + 1) * tau
        b_next = rhs(t_next)
        u_next = lhs.solve(
            M @ (2.0 * u_curr - u_prev)
            - tau ** 2 * (c1 * (K @ u_curr) + c0 * (K @ u_prev))
            + tau ** 2 * (beta * b_next + c1 * b_curr + c0 * b_prev)
        )
        u_prev, u_curr = u_curr, u_next
        b_prev, b_curr = b_curr, b_next
        if n + 1 == n_steps or _want_snapshot(t_next, snapshot_times, tau):
            record(t_next, n + 1, u_curr)
    return traj


def run_bathe(
    system: DiscreteSystem,
    tau: float,
    u0: DofVector | None = None,
    z0: DofVector | None = None,
    load=None,
    t_end: float = 1.0,
    snapshot_times=(),
) -> Trajectory:
    """Integrate with the composite Bathe scheme, unconditionally stable.

    First substep: trapezoidal rule over tau/2.  Second substep:
    three-point Euler backward over (t_n, t_n + tau/2, t_n + tau).
    Requires an invertible mass matrix, hence a stabilized system.
    """
    if system.mass_mode == "non_stabilized":
        raise IntegrationError("composite Bathe needs an invertible mass matrix")
    n_steps = _step_count(t_end, tau)
    u, z, u_b, rhs = _prepare_run(system, u0, z0, load)
    M, K = system.M_free, system.K_free
    lhs_half = splu((M + tau ** 2 / 16.0 * K).tocsc())
    lhs_full = splu((M + tau ** 2 / 9.0 * K).tocsc())

    traj = Trajectory(
        meta={"scheme": "bathe", "tau": tau, "mass_mode": system.mass_mode}
    )

    def record(t, step, u, z):
        traj.states.append(
            WaveState(system.from_free(u.copy(), u_b), system.from_free(z.copy()), None, t, step)
        )

    record(0.0, 0, u, z)
    for n in range(n_steps):
        t_n = n * tau
        b_n = rhs(t_n)
        b_h = rhs(t_n + 0.5 * tau)
        b_p = rhs(t_n + tau)
        u_h = lhs_half.solve(
            M @ (u + 0.5 * tau * z) - tau ** 2 / 16.0 * (K @ u) + tau ** 2 / 16.0 * (b_h + b_n)
        )
        z_h = (u_h - u) * (4.0 / tau) - z
        u_p = lhs_full.solve(
            tau ** 2 / 9.0 * b_p + M @ ((4.0 * z_h - z) * (tau / 9.0) + (12.0 * u_h - 3.0 * u) / 9.0)
        )
        z = (u - 4.0 * u_h + 3.0 * u_p) / tau
        u = u_p
        t_next = (n + 1) * tau
        if n + 1 == n_steps or _want_snapshot(t_next, snapshot_times, tau):
            record(t_next, n + 1, u, z)
    return traj


def discrete_energy(system: DiscreteSystem, state: WaveState) -> float:
    """Total discrete energy u' K u + z' M z of one snapshot."""
    if state.z is None:
        raise IntegrationError("state carries no velocity (displacement-only run)")
    u, z = state.u.full, state.z.full
    return float(u @ (system.K @ u) + z @ (system.M @ z))


def dump_trajectory_csv(traj: Trajectory, path: str) -> None:
    """Write snapshots as t,dof_index,u,z rows (z empty when absent)."""
    with open(path, "w") as fh:
        fh.write("t,dof_index,u,z\n")
        for s in traj.states:
            z = s.z.full if s.z is not None else None
            for i, ui in enumerate(s.u.full):
                zi = "" if z is None else f"{z[i]:.17g}"
                fh.write(f"{s.t:.17g},{i},{ui:.17g},{zi}\n")


def dump_metadata(meta: dict, path: str) -> None:
    with open(path, "w") as fh:
        for key in sorted(meta):
            fh.write(f"{key}={meta[key]}\n")
