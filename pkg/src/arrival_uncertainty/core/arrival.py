"""Arrival-time density, its moments and the energy-time uncertainty report.

Moments are computed two ways. ``closed_form`` expands the survival function
over eigenmode pairs of K and integrates each exponential exactly; when the
eigenbasis is poorly conditioned (near an exceptional point) it solves Lyapunov
equations on the decaying subspace instead, which needs no eigenvectors.
``quadrature`` integrates ``n t^(n-1) (S(t) - (1-p)) / p`` on equal
Gauss-Legendre panels no longer than the fastest oscillation period. Both
integrate the survival tail by parts rather than differentiating S numerically.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import factorial
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import solve_continuous_lyapunov

from arrival_uncertainty.core.absorption import (
    AbsorptiveSystem,
    StateLike,
    StatePropagator,
    absorption_probability,
    integration_horizon,
)
from arrival_uncertainty.core.errors import AssumptionViolated, DivergentMoment, ZeroAbsorption
from arrival_uncertainty.core.minimality import constants
from arrival_uncertainty.utils.logger import get_logger

__all__ = [
    "ArrivalStats",
    "METHODS",
    "density",
    "density_curve",
    "density_function",
    "survival_curve",
    "moments",
    "arrival_moments",
    "energy_stats",
    "dilated_energy_stats",
    "dilation_identity_residual",
    "assumption_holds",
    "uncertainty_report",
]

log = get_logger(__name__)

METHODS = ("closed_form", "quadrature")
ZERO_ABSORPTION = 1e-12
DIVERGENCE_RATE = 1e-12
NONDECAYING_MODE = 1e-8
RELATION_SLACK = 1e-9
DEFAULT_ASSUMPTION_TOL = 1e-10
# condition^2 * eps ceiling for the eigenmode pair expansion
EXPANSION_ERROR = 1e-9
GL_ORDER = 16
PANEL_CHUNK = 4096
# quadrature runs to this multiple of the survival horizon so the t S(t) tail is negligible
QUADRATURE_REACH = 2.0


@dataclass(frozen=True)
class ArrivalStats:
    """Moments of the arrival-time and energy distributions and the two relation ratios.

    ``ratio_var = std_T std_E / (sqrt(p) hbar / 2)`` and
    ``ratio_mean = mean_T std_E / (C sqrt(p) hbar)``; under ``D psi = 0`` both
    are at least one, and ``epsilon_*`` is the excess over one.
    """

    p: float
    mean_T: float
    second_T: float
    std_T: float
    mean_E: float
    std_E: float
    ratio_var: float
    ratio_mean: float
    method: str
    hbar: float = 1.0
    mean_E_dilated: float = 0.0
    std_E_dilated: float = 0.0
    horizon: float = 0.0
    assumption_holds: bool = True
    violations: Tuple[str, ...] = field(default_factory=tuple)
    dilation_residual: Optional[float] = None

    @property
    def epsilon_var(self) -> float:
        return self.ratio_var - 1.0

    @property
    def epsilon_mean(self) -> float:
        return self.ratio_mean - 1.0

    @property
    def relations_hold(self) -> bool:
        return self.assumption_holds and not self.violations

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["violations"] = list(self.violations)
        data["epsilon_var"] = self.epsilon_var
        data["epsilon_mean"] = self.epsilon_mean
        return data


def _absorbed_fraction(system: AbsorptiveSystem, psi: StateLike, p: Optional[float]) -> float:
    if p is None:
        p = absorption_probability(system, psi)
    if p < ZERO_ABSORPTION:
        raise ZeroAbsorption(f"absorption probability {p:.3e} is below {ZERO_ABSORPTION:.0e}")
    return p


def density_function(
    system: AbsorptiveSystem, psi: StateLike, p: Optional[float] = None
) -> Callable[[Any], np.ndarray]:
    """Return a vectorized ``t -> P(t) = ||(J psi)(t)||^2 / p``."""
    p = _absorbed_fraction(system, psi, p)
    prop = StatePropagator(system, psi)
    J = np.sqrt(2.0 / system.hbar) * system.sqrt_D

    def P(t: Any) -> np.ndarray:
        states = prop(t)
        exits = states @ J.T
        return np.sum(np.abs(exits) ** 2, axis=-1) / p

    return P


def density(system: AbsorptiveSystem, psi: StateLike, t: float) -> float:
    """Normalized arrival-time density ``P(t) = -(1/p) dS/dt``."""
    return float(density_function(system, psi)(float(t)))


def density_curve(system: AbsorptiveSystem, psi: StateLike, times: np.ndarray) -> np.ndarray:
    return np.asarray(density_function(system, psi)(np.asarray(times, dtype=float)), dtype=float)


def survival_curve(system: AbsorptiveSystem, psi: StateLike, times: np.ndarray) -> np.ndarray:
    values = StatePropagator(system, psi).survival(np.asarray(times, dtype=float))
    return np.clip(values, 0.0, 1.0)


def _gauss_panels(horizon: float, width: float) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Nodes and weights of equal Gauss-Legendre panels covering ``[0, horizon]``, in chunks."""
    count = max(1, int(np.ceil(horizon / width)))
    nodes, weights = leggauss(GL_ORDER)
    edges = np.linspace(0.0, horizon, count + 1)
    for start in range(0, count, PANEL_CHUNK):
        e = edges[start : start + PANEL_CHUNK + 1]
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[1:] + e[:-1])
        yield (mid[:, None] + half[:, None] * nodes).reshape(-1), (half[:, None] * weights).reshape(-1)


def _panel_width(system: AbsorptiveSystem) -> float:
    # Every frequency of ||B_t psi||^2 is at most 2||K||/hbar: one panel per shortest period.
    return np.pi * system.natural_time


def _quadrature_moments(
    system: AbsorptiveSystem, psi: StateLike, p: float, horizon: float
) -> Tuple[float, float]:
    vec = system.state(psi)
    # range(1 - R) is K-invariant, so the decaying part carries the whole tail S(t) - (1 - p).
    prop = StatePropagator(system, vec - system.asymptotic.R @ vec)
    reach = QUADRATURE_REACH * horizon
    mean = second = 0.0
    panels = 0
    for t, w in _gauss_panels(reach, _panel_width(system)):
        tail = prop.survival(t) / p
        mean += float(w @ tail)
        second += float(w @ (2.0 * t * tail))
        panels += t.size // GL_ORDER
    log.debug("quadrature over [0, %.4g] with %d panels", reach, panels)
    return mean, second


def _expansion_moments(system: AbsorptiveSystem, psi: StateLike, p: float) -> Tuple[float, float]:
    fac = system.factorization
    assert fac is not None
    vec = system.state(psi)
    V = fac.right_vectors
    c = fac.inverse_vectors @ vec
    R = system.asymptotic.R
    leak = np.linalg.norm(V - R @ V, axis=0) / np.linalg.norm(V, axis=0)
    nondecaying = leak <= NONDECAYING_MODE
    gram = V.conj().T @ V
    weights = np.conj(c)[:, None] * c[None, :] * gram
    lam = fac.eigenvalues
    rates = 1j * (np.conj(lam)[:, None] - lam[None, :]) / system.hbar
    relevant = ~(nondecaying[:, None] & nondecaying[None, :])
    significant = relevant & (np.abs(weights) > 1e-15 * max(1.0, float(np.max(np.abs(weights)))))
    if np.any(significant):
        slowest = float(np.min(-rates[significant].real))
        if slowest < DIVERGENCE_RATE:
            raise DivergentMoment(f"decay rate {slowest:.3e} below {DIVERGENCE_RATE:.0e}; arrival moments diverge")
    w = weights[relevant]
    s = rates[relevant]
    first = float(np.sum(w * factorial(1) / (-s)).real) / p
    second = float(np.sum(w * factorial(2) / (-s) ** 2).real) / p
    return first, second


def _decaying_block(system: AbsorptiveSystem, vec: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal basis W of ``range(1 - R)`` with ``-iK/hbar`` and the state in that basis."""
    w, U = np.linalg.eigh(np.eye(system.dim) - system.asymptotic.R)
    W = U[:, w > 0.5]
    A = (-1j / system.hbar) * (W.conj().T @ system.K @ W)
    return W, A, W.conj().T @ vec


def _check_decay(A: np.ndarray, x: np.ndarray) -> None:
    rates, modes = np.linalg.eig(A)
    slow = -rates.real < DIVERGENCE_RATE
    if not np.any(slow):
        return
    coeffs = np.linalg.lstsq(modes, x, rcond=None)[0]
    overlap = np.abs(coeffs[slow]) * np.linalg.norm(modes[:, slow], axis=0)
    if np.any(overlap > 1e-12 * float(np.linalg.norm(x))):
        slowest = float(np.min(-rates.real[slow]))
        raise DivergentMoment(f"decay rate {slowest:.3e} below {DIVERGENCE_RATE:.0e}; arrival moments diverge")


def _gramians(A: np.ndarray, Q: np.ndarray, count: int) -> List[np.ndarray]:
    """``X_n = int_0^inf t^n e^{A^* t} Q e^{A t} dt / n!`` for ``n < count``.

    Each solves ``A^* X_n + X_n A = -X_{n-1}`` with ``X_{-1} = Q``; A must be stable.
    """
    Ah = A.conj().T
    out: List[np.ndarray] = []
    previous = Q
    for _ in range(count):
        previous = solve_continuous_lyapunov(Ah, -previous)
        out.append(previous)
    return out


def _lyapunov_moments(system: AbsorptiveSystem, psi: StateLike, p: float) -> Tuple[float, float]:
    _W, A, x = _decaying_block(system, system.state(psi))
    _check_decay(A, x)
    X0, X1 = _gramians(A, np.eye(A.shape[0], dtype=np.complex128), 2)
    return float(np.vdot(x, X0 @ x).real) / p, 2.0 * float(np.vdot(x, X1 @ x).real) / p


def moments(system: AbsorptiveSystem, psi: StateLike, n: int, method: str = "closed_form") -> float:
    """``<T^n>`` for ``n`` in {1, 2}.

    Raises
    ------
    DivergentMoment
        When a mode overlapping the state decays slower than 1e-12.
    ZeroAbsorption
        When ``p < 1e-12``.
    """
    if n not in (1, 2):
        raise ValueError(f"only the first and second moments are supported, got n={n}")
    first, second, _method, _horizon = _moment_pair(system, psi, method)
    return first if n == 1 else second


def arrival_moments(system: AbsorptiveSystem, psi: StateLike, method: str = "closed_form") -> Tuple[float, float]:
    """``(<T>, <T^2>)`` from one horizon search."""
    first, second, _method, _horizon = _moment_pair(system, psi, method)
    return first, second


def _moment_pair(
    system: AbsorptiveSystem, psi: StateLike, method: str, p: Optional[float] = None
) -> Tuple[float, float, str, float]:
    if method not in METHODS:
        raise ValueError(f"unknown moment method '{method}'. Valid: {', '.join(METHODS)}")
    p = _absorbed_fraction(system, psi, p)
    prop = StatePropagator(system, psi)
    horizon = integration_horizon(system, psi, p=p, propagator_=prop)
    if method == "quadrature":
        first, second = _quadrature_moments(system, psi, p, horizon)
    else:
        fac = system.factorization
        if fac is not None and fac.condition**2 * np.finfo(float).eps <= EXPANSION_ERROR:
            first, second = _expansion_moments(system, psi, p)
        else:
            # pair sums lose condition^2 * eps near an exceptional point
            log.debug("eigenbasis condition too large for the mode expansion; solving Lyapunov equations")
            first, second = _lyapunov_moments(system, psi, p)
    log.debug("moments via %s: <T>=%.12g <T^2>=%.12g (horizon %.4g)", method, first, second, horizon)
    return first, second, method, horizon


def energy_stats(system: AbsorptiveSystem, psi: StateLike) -> Tuple[float, float]:
    """``(<H>, Delta E)`` from exact quadratic forms in H."""
    vec = system.state(psi)
    Hpsi = system.H @ vec
    mean = float(np.vdot(vec, Hpsi).real)
    variance = float(np.vdot(Hpsi, Hpsi).real) - mean**2
    return mean, float(np.sqrt(max(variance, 0.0)))


def dilated_energy_stats(
    system: AbsorptiveSystem, psi: StateLike, p: Optional[float] = None
) -> Tuple[float, float]:
    """Mean and spread of the energy of the normalized dilated vector.

    From the one-sided derivatives of the characteristic function at zero:
    ``<psi|(1-R) H psi> / p`` and ``<H psi|(1-R) H psi> / p``. Valid when ``D psi = 0``.
    """
    p = _absorbed_fraction(system, psi, p)
    vec = system.state(psi)
    Hpsi = system.H @ vec
    R = system.asymptotic.R
    mean = float(np.vdot(vec, Hpsi - R @ Hpsi).real) / p
    second = float(np.vdot(Hpsi, Hpsi - R @ Hpsi).real) / p
    return mean, float(np.sqrt(max(second - mean**2, 0.0)))


def dilation_identity_residual(
    system: AbsorptiveSystem,
    psi: StateLike,
    p: Optional[float] = None,
    horizon: Optional[float] = None,
    method: str = "closed_form",
) -> float:
    """``|int_0^inf ||(J psi)(t)||^2 dt - p|``.

    ``closed_form`` solves one Lyapunov equation for the exit Gramian of the
    decaying block; ``quadrature`` integrates the flux on Gauss-Legendre panels.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method '{method}'. Valid: {', '.join(METHODS)}")
    if p is None:
        p = absorption_probability(system, psi)
    vec = system.state(psi)
    if method == "closed_form":
        W, A, x = _decaying_block(system, vec)
        _check_decay(A, x)
        exit_weight = (2.0 / system.hbar) * (W.conj().T @ system.D @ W)
        (gramian,) = _gramians(A, exit_weight, 1)
        return abs(float(np.vdot(x, gramian @ x).real) - p)
    prop = StatePropagator(system, vec)
    if horizon is None:
        horizon = integration_horizon(system, psi, p=p, propagator_=prop)
    J = np.sqrt(2.0 / system.hbar) * system.sqrt_D
    total = 0.0
    for t, w in _gauss_panels(QUADRATURE_REACH * horizon, _panel_width(system)):
        exits = prop(t) @ J.T
        total += float(w @ np.sum(np.abs(exits) ** 2, axis=-1))
    return abs(total - p)


def assumption_holds(system: AbsorptiveSystem, psi: StateLike, tol: float = DEFAULT_ASSUMPTION_TOL) -> bool:
    """True when the state has no overlap with the absorber: ``||D psi|| <= tol ||D||``."""
    vec = system.state(psi)
    d_norm = float(np.linalg.norm(system.D, 2))
    return float(np.linalg.norm(system.D @ vec)) <= tol * d_norm


def uncertainty_report(
    system: AbsorptiveSystem,
    psi: StateLike,
    method: str = "closed_form",
    tol: float = DEFAULT_ASSUMPTION_TOL,
    strict: bool = True,
    check_dilation: bool = False,
) -> ArrivalStats:
    """Compute every quantity entering both energy-time relations.

    The relations are only asserted when ``||D psi|| <= tol ||D||``. Otherwise
    the report is still computed but flagged, and with ``strict`` it is raised
    inside :class:`AssumptionViolated`.
    """
    holds = assumption_holds(system, psi, tol)
    p = _absorbed_fraction(system, psi, None)
    mean_T, second_T, used, horizon = _moment_pair(system, psi, method, p=p)
    std_T = float(np.sqrt(max(second_T - mean_T**2, 0.0)))
    mean_E, std_E = energy_stats(system, psi)
    mean_hat, std_hat = dilated_energy_stats(system, psi, p=p)
    hbar = system.hbar
    root_p = np.sqrt(p)
    ratio_var = float(std_T * std_E / (root_p * hbar / 2.0))
    ratio_mean = float(mean_T * std_E / (constants().C * root_p * hbar))

    violations: List[str] = []
    if second_T < mean_T**2 * (1.0 - RELATION_SLACK):
        violations.append("variance_negative")
    if holds:
        if ratio_var <= 1.0:
            violations.append("relation_variance")
        if ratio_mean < 1.0 - RELATION_SLACK:
            violations.append("relation_mean")
        if std_E < root_p * std_hat - RELATION_SLACK * max(1.0, std_E):
            violations.append("energy_dilation")
    residual = (
        dilation_identity_residual(system, psi, p=p, horizon=horizon, method=used) if check_dilation else None
    )

    stats = ArrivalStats(
        p=p,
        mean_T=mean_T,
        second_T=second_T,
        std_T=std_T,
        mean_E=mean_E,
        std_E=std_E,
        ratio_var=ratio_var,
        ratio_mean=ratio_mean,
        method=used,
        hbar=hbar,
        mean_E_dilated=mean_hat,
        std_E_dilated=std_hat,
        horizon=horizon,
        assumption_holds=holds,
        violations=tuple(violations),
        dilation_residual=residual,
    )
    if violations:
        log.error(
            "uncertainty relation check failed: %s",
            ", ".join(violations),
            extra={"fields": {"ratio_var": ratio_var, "ratio_mean": ratio_mean, "p": p}},
        )
    if not holds:
        message = "initial state overlaps the absorber (D psi != 0); relations not applicable"
        if strict:
            raise AssumptionViolated(message, report=stats)
        log.warning(message)
    return stats
