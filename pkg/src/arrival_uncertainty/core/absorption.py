"""Absorptive dynamics: the contraction semigroup generated by ``K = H - iD``.

Responsibilities:
    * Validate and cache an :class:`AbsorptiveSystem` (K, its factorization, D^1/2, R).
    * Propagate states, ``B_t psi = exp(-i K t / hbar) psi``, in closed form when
      the eigenbasis is well conditioned and by adaptive DOP853 integration otherwise.
    * Compute the asymptotic operator ``R = lim B_t^* B_t`` by two independent
      routes that must agree, the absorption probability ``p``, the dilation
      trajectory ``(J psi)(t)`` and the characteristic function of the dilated
      energy distribution.

Non-goals:
    * Mixed-state (density matrix) evolution and time-dependent generators.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from arrival_uncertainty.core.errors import (
    DefectiveMatrix,
    DimensionMismatch,
    NegativeTime,
    NonConvergent,
    NonpositiveParameter,
    NotHermitian,
    NotPositive,
    ZeroAbsorption,
)
from arrival_uncertainty.core.linops import (
    DEFAULT_CONDITION_CAP,
    SpectralFactorization,
    StateVector,
    as_matrix,
    is_hermitian,
    propagator,
    psd_sqrt,
    spectral_factorize,
)
from arrival_uncertainty.utils.logger import get_logger

__all__ = [
    "AbsorptiveSystem",
    "AsymptoticOperator",
    "StatePropagator",
    "make_system",
    "evolve",
    "survival",
    "propagator_matrix",
    "arrival_operator",
    "exit_inner_product",
    "undetected_projector",
    "asymptotic_operator",
    "absorption_probability",
    "integration_horizon",
    "dilation_trajectory",
    "characteristic_function",
    "dilute",
    "DEFAULT_HORIZON_CAP",
]

log = get_logger(__name__)

DEFAULT_HORIZON_CAP = 1e6
ODE_RTOL = 1e-10
ODE_ATOL = 1e-12
R_STEP_TOL = 1e-10
R_AGREEMENT_TOL = 1e-8
TAIL_TOL = 1e-12
ZERO_ABSORPTION = 1e-12

StateLike = Union[StateVector, np.ndarray]
TimeLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class AsymptoticOperator:
    """``R = lim_{t->inf} B_t^* B_t`` with its convergence diagnostics.

    ``R`` is the orthogonal projector onto the undetected subspace; ``horizon``
    is the time at which ``B_T^* B_T`` had settled onto it and
    ``limit_residual`` the Frobenius distance between the two at that time.
    """

    R: np.ndarray
    converged: bool
    horizon: float
    limit_residual: float


@dataclass(frozen=True, eq=False)
class AbsorptiveSystem:
    """Hermitian generator ``H``, positive absorber ``D`` and the action unit ``hbar``.

    Instances are immutable; derived quantities are computed once on first use.
    """

    H: np.ndarray
    D: np.ndarray
    hbar: float = 1.0
    condition_cap: float = DEFAULT_CONDITION_CAP
    horizon_cap: float = DEFAULT_HORIZON_CAP

    def __post_init__(self) -> None:
        H = as_matrix(self.H, "H")
        D = as_matrix(self.D, "D")
        if H.shape != D.shape:
            raise DimensionMismatch(f"H has shape {H.shape} but D has shape {D.shape}")
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise NonpositiveParameter(f"hbar must be positive, got {self.hbar}")
        if not is_hermitian(H):
            raise NotHermitian("H must be Hermitian (||H - H^*|| <= 1e-12 ||H||)")
        if not is_hermitian(D):
            raise NotHermitian("D must be Hermitian (||D - D^*|| <= 1e-12 ||D||)")
        H = 0.5 * (H + H.conj().T)
        D = 0.5 * (D + D.conj().T)
        d_min = float(np.linalg.eigvalsh(D)[0])
        if d_min < -1e-12 * max(1.0, float(np.linalg.norm(D, 2))):
            raise NotPositive(f"D must be positive semidefinite; smallest eigenvalue is {d_min:.6g}")
        for arr in (H, D):
            arr.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def dim(self) -> int:
        return int(self.H.shape[0])

    @cached_property
    def K(self) -> np.ndarray:
        K = self.H - 1j * self.D
        K.setflags(write=False)
        return K

    @cached_property
    def factorization(self) -> Optional[SpectralFactorization]:
        """Eigen-triple of K, or None when the ODE fallback is in force."""
        try:
            fac = spectral_factorize(self.K, condition_cap=self.condition_cap)
        except DefectiveMatrix as e:
            log.warning("K is near-defective (%s); propagating with DOP853", e)
            return None
        scale = max(1.0, float(np.max(np.abs(fac.eigenvalues))))
        worst = float(np.max(fac.eigenvalues.imag))
        if worst > 1e-12 * scale * max(1.0, fac.condition):
            raise NotPositive(f"K has an eigenvalue with positive imaginary part {worst:.3e}; not a contraction")
        return fac

    @property
    def uses_ode_fallback(self) -> bool:
        return self.factorization is None

    @cached_property
    def sqrt_D(self) -> np.ndarray:
        return psd_sqrt(self.D)

    @cached_property
    def asymptotic(self) -> AsymptoticOperator:
        return asymptotic_operator(self)

    @property
    def natural_time(self) -> float:
        """``hbar / ||K||``, the shortest dynamical time scale."""
        return self.hbar / max(float(np.linalg.norm(self.K, 2)), np.finfo(float).tiny)

    def state(self, psi: StateLike) -> np.ndarray:
        """Return ``psi`` as a vector of this system's dimension."""
        vec = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=np.complex128).reshape(-1)
        if vec.shape[0] != self.dim:
            raise DimensionMismatch(f"state has dimension {vec.shape[0]}, system has {self.dim}")
        return vec


def make_system(
    H: np.ndarray,
    D: np.ndarray,
    hbar: float = 1.0,
    condition_cap: float = DEFAULT_CONDITION_CAP,
    horizon_cap: float = DEFAULT_HORIZON_CAP,
) -> AbsorptiveSystem:
    """Validate ``H``, ``D`` and build the system (factorizing K eagerly)."""
    system = AbsorptiveSystem(H=H, D=D, hbar=hbar, condition_cap=condition_cap, horizon_cap=horizon_cap)
    _ = system.factorization
    return system


def _check_times(t: TimeLike) -> np.ndarray:
    times = np.asarray(t, dtype=float)
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise NegativeTime(f"times must be finite and >= 0, got min {float(np.min(times)):.6g}")
    return times


class StatePropagator:
    """Evaluate ``B_t psi`` repeatedly for one system and state.

    With a factorized K this is a closed-form sum over eigenmodes. Otherwise one
    dense-output DOP853 solve covers ``[0, T]`` and is extended (doubling) when
    later times are requested.
    """

    def __init__(self, system: AbsorptiveSystem, psi: StateLike) -> None:
        self.system = system
        self.psi = system.state(psi)
        fac = system.factorization
        self._fac = fac
        if fac is not None:
            self._coeffs = fac.inverse_vectors @ self.psi
        self._solution = None
        self._solved_until = 0.0

    def _ensure(self, t_max: float) -> None:
        if self._solution is not None and t_max <= self._solved_until:
            return
        target = max(t_max, 2.0 * self._solved_until, self.system.natural_time)
        K, hbar = self.system.K, self.system.hbar

        def rhs(_t: float, y: np.ndarray) -> np.ndarray:
            return (-1j / hbar) * (K @ y)

        sol = solve_ivp(
            rhs,
            (0.0, target),
            self.psi.astype(np.complex128),
            method="DOP853",
            rtol=ODE_RTOL,
            atol=ODE_ATOL,
            dense_output=True,
        )
        if not sol.success:
            raise NonConvergent(f"DOP853 integration failed: {sol.message}")
        log.debug("ODE propagation solved to T=%.4g with %d steps", target, sol.t.size)
        self._solution = sol
        self._solved_until = target

    def __call__(self, t: TimeLike) -> np.ndarray:
        """Return ``B_t psi``; shape ``(dim,)`` for scalar t, ``(n, dim)`` for arrays."""
        times = _check_times(t)
        if self._fac is not None:
            phases = np.exp(-1j * np.multiply.outer(times, self._fac.eigenvalues) / self.system.hbar)
            return (phases * self._coeffs) @ self._fac.right_vectors.T
        if times.size and float(np.max(times)) == 0.0:
            return np.broadcast_to(self.psi, times.shape + self.psi.shape).copy()
        self._ensure(float(np.max(times)))
        values = self._solution.sol(times.reshape(-1))  # type: ignore[union-attr]
        return values.T.reshape(times.shape + self.psi.shape)

    def survival(self, t: TimeLike) -> np.ndarray:
        """``||B_t psi||^2`` elementwise."""
        states = self(t)
        return np.sum(np.abs(states) ** 2, axis=-1)


def evolve(system: AbsorptiveSystem, psi: StateLike, t: float) -> np.ndarray:
    """Return ``B_t psi`` (norm nonincreasing in t)."""
    if t < 0:
        raise NegativeTime(f"t must be >= 0, got {t}")
    if t == 0:
        return system.state(psi).copy()
    return StatePropagator(system, psi)(float(t))


def survival(system: AbsorptiveSystem, psi: StateLike, t: float) -> float:
    """Survival probability ``S(t) = ||B_t psi||^2`` in [0, 1]."""
    vec = evolve(system, psi, t)
    return float(min(1.0, max(0.0, np.vdot(vec, vec).real)))


def propagator_matrix(system: AbsorptiveSystem, t: float) -> np.ndarray:
    """``B_t`` as a matrix."""
    if t < 0:
        raise NegativeTime(f"t must be >= 0, got {t}")
    fac = system.factorization
    if fac is not None:
        return propagator(fac, float(t), system.hbar)
    return sla.expm((-1j * float(t) / system.hbar) * system.K)


def arrival_operator(system: AbsorptiveSystem, t: float, s: float) -> np.ndarray:
    """``F([t, s]) = B_t^* B_t - B_s^* B_s``, the probability operator of arrival in [t, s]."""
    if t < 0 or s < 0:
        raise NegativeTime(f"interval endpoints must be >= 0, got [{t}, {s}]")
    if s < t:
        raise ValueError(f"interval [{t}, {s}] is reversed")
    Bt = propagator_matrix(system, t)
    Bs = propagator_matrix(system, s)
    F = Bt.conj().T @ Bt - Bs.conj().T @ Bs
    return 0.5 * (F + F.conj().T)


def exit_inner_product(system: AbsorptiveSystem, psi: StateLike, phi: StateLike) -> complex:
    """Exit-space form ``<j psi | j phi> = i(<psi|K phi> - <K psi|phi>) / hbar``.

    Equals ``(2/hbar) <psi|D phi>``; it is ``-d/dt <B_t psi|B_t phi>`` at ``t = 0+``.
    """
    a, b = system.state(psi), system.state(phi)
    K = system.K
    return complex(1j * (np.vdot(a, K @ b) - np.vdot(K @ a, b)) / system.hbar)


def _null_space(M: np.ndarray, atol: float) -> np.ndarray:
    if M.size == 0:
        return np.zeros((M.shape[1], 0), dtype=np.complex128)
    _, s, Vh = np.linalg.svd(M)
    rank = int(np.sum(s > atol))
    return Vh[rank:].conj().T


def undetected_projector(system: AbsorptiveSystem, atol: Optional[float] = None) -> np.ndarray:
    """Orthogonal projector onto the largest H-invariant subspace inside ker D.

    On that subspace B_t is unitary; its orthogonal complement is K-invariant
    and every eigenvalue of K there has strictly negative imaginary part, so
    this projector is the limit R.
    """
    n = system.dim
    scale = max(1.0, float(np.linalg.norm(system.H, 2)), float(np.linalg.norm(system.D, 2)))
    tol = atol if atol is not None else 1e-10 * scale
    w, U = np.linalg.eigh(system.D)
    Q = U[:, w <= tol]
    identity = np.eye(n, dtype=np.complex128)
    while Q.shape[1] > 0:
        leak = (identity - Q @ Q.conj().T) @ system.H @ Q
        if float(np.linalg.norm(leak, 2)) <= tol:
            break
        N = _null_space(leak, tol)
        if N.shape[1] == Q.shape[1]:  # pragma: no cover (leak below tol handled above)
            break
        Q = Q @ N
    P = Q @ Q.conj().T
    return 0.5 * (P + P.conj().T)


def asymptotic_operator(system: AbsorptiveSystem) -> AsymptoticOperator:
    """Compute R by repeated squaring of B_T and cross-check with the algebraic projector.

    Horizons double (``B_{2T} = B_T^2``) until successive ``B_T^* B_T`` differ by
    less than 1e-10 (Frobenius) and agree with :func:`undetected_projector` to 1e-8.

    Raises
    ------
    NonConvergent
        If the horizon passes ``system.horizon_cap`` before both criteria hold.
    """
    P = undetected_projector(system)
    T = system.natural_time
    B = propagator_matrix(system, T)
    previous = B.conj().T @ B
    while True:
        B = B @ B
        T *= 2.0
        current = B.conj().T @ B
        step = float(np.linalg.norm(current - previous))
        residual = float(np.linalg.norm(current - P))
        if step < R_STEP_TOL and residual <= R_AGREEMENT_TOL:
            log.debug("R converged at T=%.4g (rank %d, residual %.2e)", T, int(round(np.trace(P).real)), residual)
            return AsymptoticOperator(R=P, converged=True, horizon=T, limit_residual=residual)
        if T > system.horizon_cap:
            raise NonConvergent(
                f"B_T^* B_T did not settle on the undetected projector by T={T:.3g} "
                f"(step {step:.2e}, disagreement {residual:.2e})"
            )
        previous = current


def absorption_probability(system: AbsorptiveSystem, psi: StateLike) -> float:
    """Total absorption probability ``p = <psi|(1 - R) psi>``."""
    vec = system.state(psi)
    asym = system.asymptotic
    p = float(np.vdot(vec, vec - asym.R @ vec).real)
    p = min(1.0, max(0.0, p))
    tail = 1.0 - float(StatePropagator(system, vec).survival(asym.horizon))
    if abs(tail - p) > R_AGREEMENT_TOL:
        log.warning("p=%.12f disagrees with 1 - S(T=%.3g)=%.12f", p, asym.horizon, tail)
    return p


def integration_horizon(
    system: AbsorptiveSystem,
    psi: StateLike,
    p: Optional[float] = None,
    tol: float = TAIL_TOL,
    propagator_: Optional[StatePropagator] = None,
) -> float:
    """Smallest doubling horizon T with ``S(T) - (1 - p) < tol`` (capped)."""
    if p is None:
        p = absorption_probability(system, psi)
    prop = propagator_ or StatePropagator(system, psi)
    floor = 1.0 - p
    T = system.natural_time
    while float(prop.survival(T)) - floor >= tol:
        T *= 2.0
        if T > system.horizon_cap:
            raise NonConvergent(f"survival tail above {tol:.0e} beyond horizon cap {system.horizon_cap:.3g}")
    return T


def dilation_trajectory(system: AbsorptiveSystem, psi: StateLike, t: TimeLike) -> np.ndarray:
    """``(J psi)(t) = sqrt(2/hbar) D^1/2 B_t psi``; ``||(J psi)(t)||^2 = -dS/dt``."""
    states = StatePropagator(system, psi)(t)
    return np.sqrt(2.0 / system.hbar) * (states @ system.sqrt_D.T)


def characteristic_function(
    system: AbsorptiveSystem,
    psi: StateLike,
    t: float,
    R: Optional[AsymptoticOperator] = None,
) -> complex:
    """Characteristic function of the dilated energy distribution.

    ``C(t) = <psi|(1-R) B_t psi> / p`` for ``t >= 0`` and
    ``<B_{-t} psi|(1-R) psi> / p`` for ``t < 0``.
    """
    vec = system.state(psi)
    asym = R if R is not None else system.asymptotic
    projected = vec - asym.R @ vec
    p = float(np.vdot(vec, projected).real)
    if p < ZERO_ABSORPTION:
        raise ZeroAbsorption(f"absorption probability {p:.3e} is zero; C(t) undefined")
    moved = evolve(system, vec, abs(float(t)))
    if t >= 0:
        return complex(np.vdot(projected, moved) / p)
    return complex(np.vdot(moved, projected) / p)


def dilute(system: AbsorptiveSystem, psi: StateLike, p_prime: float) -> Tuple[AbsorptiveSystem, StateVector]:
    """Extend by an undetected one-dimensional summand at energy ``<psi|H psi>``.

    The new state ``sqrt(p') psi + sqrt(1-p') phi0`` has absorption probability
    ``p' * p``, the same arrival-time density and energy variance scaled by ``p'``.
    """
    if not 0.0 < p_prime <= 1.0:
        raise NonpositiveParameter(f"p' must lie in (0, 1], got {p_prime}")
    vec = system.state(psi)
    energy = float(np.vdot(vec, system.H @ vec).real)
    H = sla.block_diag(system.H, np.array([[energy]], dtype=np.complex128))
    D = sla.block_diag(system.D, np.zeros((1, 1), dtype=np.complex128))
    amps = np.concatenate([np.sqrt(p_prime) * vec, [np.sqrt(1.0 - p_prime)]])
    extended = make_system(H, D, system.hbar, system.condition_cap, system.horizon_cap)
    return extended, StateVector.normalized(amps)
