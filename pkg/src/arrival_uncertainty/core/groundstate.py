"""Discretized ground-state problems and the gapped-ground-state lemma.

Both Schroedinger operators are discretized with second-order central
differences and Dirichlet ends, giving symmetric tridiagonal matrices:

  * oscillator   ``eta^2 p^2 + (t - tau)^2 / eta^2`` on a grid symmetric about tau, spectrum 2n+1
  * wall-linear  ``eta^2 p^2 + t / eta`` on ``[0, t_max]``, spectrum ``-Z_n``

Spectra do not depend on eta or tau; the parameters are there to check that.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

from arrival_uncertainty.core.errors import (
    DegenerateGroundState,
    DimensionMismatch,
    GridTooCoarse,
    NonpositiveParameter,
    NotHermitian,
    NotPositive,
)
from arrival_uncertainty.core.linops import as_matrix, is_hermitian, trace_norm
from arrival_uncertainty.utils.logger import get_logger

__all__ = [
    "Grid",
    "GapLemmaReport",
    "oscillator_spectrum",
    "wall_linear_spectrum",
    "wall_linear_ground_state",
    "gap_lemma_check",
]

log = get_logger(__name__)

MIN_POINTS = 100
RICHARDSON_TOL = 1e-2
OSCILLATOR_EXTENT = 8.0
WALL_EXTENT = 15.0
GAP_TOL = 1e-10
LEMMA_SLACK = 1e-9


@dataclass(frozen=True)
class Grid:
    """``n`` interior points of ``[t_min, t_max]`` with Dirichlet values at both ends."""

    t_min: float
    t_max: float
    n: int

    def __post_init__(self) -> None:
        if self.n < MIN_POINTS:
            raise GridTooCoarse(f"grid needs at least {MIN_POINTS} interior points, got {self.n}")
        if not self.t_max > self.t_min:
            raise ValueError(f"grid endpoints must satisfy t_min < t_max, got [{self.t_min}, {self.t_max}]")

    @classmethod
    def symmetric(cls, half_width: float, n: int, center: float = 0.0) -> "Grid":
        return cls(center - half_width, center + half_width, n)

    @classmethod
    def wall(cls, t_max: float, n: int) -> "Grid":
        return cls(0.0, t_max, n)

    @property
    def spacing(self) -> float:
        return (self.t_max - self.t_min) / (self.n + 1)

    @property
    def points(self) -> np.ndarray:
        return self.t_min + self.spacing * np.arange(1, self.n + 1)

    def refined(self) -> "Grid":
        """Same interval with half the spacing (``n' = 2n + 1``)."""
        return Grid(self.t_min, self.t_max, 2 * self.n + 1)


def _lowest(grid: Grid, potential: np.ndarray, eta: float, k: int) -> np.ndarray:
    h = grid.spacing
    diagonal = 2.0 * eta**2 / h**2 + potential
    off = np.full(grid.n - 1, -(eta**2) / h**2)
    return eigh_tridiagonal(diagonal, off, eigvals_only=True, select="i", select_range=(0, k - 1))


def _solve(grid: Grid, k: int, potential: Any, eta: float, extrapolate: bool, label: str) -> List[float]:
    if k < 1 or k > grid.n:
        raise ValueError(f"k must lie in [1, {grid.n}], got {k}")
    if not eta > 0:
        raise NonpositiveParameter(f"eta must be > 0, got {eta}")
    raw = _lowest(grid, potential(grid.points), eta, k)
    fine_grid = grid.refined()
    fine = _lowest(fine_grid, potential(fine_grid.points), eta, k)
    richardson = (4.0 * fine - raw) / 3.0
    drift = float(np.max(np.abs(richardson - raw)))
    if drift > RICHARDSON_TOL:
        raise GridTooCoarse(
            f"{label}: Richardson estimate moves the spectrum by {drift:.3e} > {RICHARDSON_TOL:.0e}; refine the grid"
        )
    log.debug("%s spectrum n=%d h=%.3e drift=%.2e", label, grid.n, grid.spacing, drift)
    return [float(v) for v in (richardson if extrapolate else raw)]


def oscillator_spectrum(
    grid: Grid, k: int, eta: float = 1.0, tau: float = 0.0, extrapolate: bool = False
) -> List[float]:
    """Lowest ``k`` eigenvalues of ``eta^2 p^2 + (t - tau)^2 / eta^2`` (tend to 1, 3, 5, ...).

    Raises
    ------
    GridTooCoarse
        If the grid is not centered on ``tau`` with half-width at least ``8 eta``,
        or Richardson extrapolation moves an eigenvalue by more than 1e-2.
    """
    half = 0.5 * (grid.t_max - grid.t_min)
    center = 0.5 * (grid.t_max + grid.t_min)
    if abs(center - tau) > 1e-12 * max(1.0, half):
        raise GridTooCoarse(f"oscillator grid must be symmetric about tau={tau}, center is {center}")
    if half < OSCILLATOR_EXTENT * eta:
        raise GridTooCoarse(f"oscillator grid half-width {half:g} is below {OSCILLATOR_EXTENT:g} * eta")
    return _solve(grid, k, lambda t: (t - tau) ** 2 / eta**2, eta, extrapolate, "oscillator")


def wall_linear_spectrum(grid: Grid, k: int, eta: float = 1.0, extrapolate: bool = False) -> List[float]:
    """Lowest ``k`` eigenvalues of ``eta^2 p^2 + t / eta`` with a wall at 0 (tend to 2.3381, 4.0879, ...)."""
    _check_wall(grid, eta)
    return _solve(grid, k, lambda t: t / eta, eta, extrapolate, "wall-linear")


def _check_wall(grid: Grid, eta: float) -> None:
    if grid.t_min != 0.0:
        raise ValueError(f"wall-linear problem needs the wall at t_min=0, got {grid.t_min}")
    if grid.t_max < WALL_EXTENT * eta:
        raise GridTooCoarse(f"wall-linear grid must reach {WALL_EXTENT:g} * eta, got t_max={grid.t_max:g}")


def wall_linear_ground_state(grid: Grid, eta: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Grid points and ground eigenvector normalized to ``sum v^2 h = 1`` and positive."""
    _check_wall(grid, eta)
    h = grid.spacing
    t = grid.points
    diagonal = 2.0 * eta**2 / h**2 + t / eta
    off = np.full(grid.n - 1, -(eta**2) / h**2)
    _w, vectors = eigh_tridiagonal(diagonal, off, select="i", select_range=(0, 0))
    v = vectors[:, 0]
    v = v / np.sqrt(np.sum(v**2) * h)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return t, v


@dataclass(frozen=True)
class GapLemmaReport:
    """Both sides of the trace-norm estimate and the fidelity estimate for one (A, rho)."""

    a0: float
    a1: float
    alpha: float
    lhs: float
    rhs: float
    fidelity_deficit: float
    fidelity_bound: float
    holds: bool
    fidelity_holds: bool

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def gap_lemma_check(A: Any, rho: Any) -> GapLemmaReport:
    """Check ``||rho - |phi0><phi0| ||_1 <= 2 sqrt(alpha / (a1 - a0))`` with ``alpha = tr(rho A) - a0``.

    Also checks ``1 - <phi0|rho|phi0> <= alpha / (a1 - a0)``.
    """
    A = as_matrix(A, "A")
    rho = as_matrix(rho, "rho")
    if A.shape != rho.shape:
        raise DimensionMismatch(f"A has shape {A.shape} but rho has shape {rho.shape}")
    if A.shape[0] < 2:
        raise DimensionMismatch("the gap lemma needs dimension >= 2")
    if not is_hermitian(A):
        raise NotHermitian("A must be Hermitian")
    if not is_hermitian(rho):
        raise NotHermitian("rho must be Hermitian")
    A = 0.5 * (A + A.conj().T)
    rho = 0.5 * (rho + rho.conj().T)
    if float(np.linalg.eigvalsh(rho)[0]) < -1e-12:
        raise NotPositive("rho must be positive semidefinite")
    if abs(float(np.trace(rho).real) - 1.0) > 1e-10:
        raise ValueError(f"rho must have unit trace, got {np.trace(rho).real:.12f}")

    w, U = np.linalg.eigh(A)
    a0, a1 = float(w[0]), float(w[1])
    gap = a1 - a0
    if gap <= GAP_TOL * max(1.0, abs(a0), abs(a1)):
        raise DegenerateGroundState(f"ground eigenvalue is degenerate (gap {gap:.3e} <= {GAP_TOL:.0e})")
    phi0 = U[:, 0]
    ground = np.outer(phi0, phi0.conj())
    alpha = max(float(np.trace(rho @ A).real) - a0, 0.0)
    lhs = trace_norm(rho - ground)
    rhs = 2.0 * float(np.sqrt(alpha / gap))
    deficit = 1.0 - float(np.vdot(phi0, rho @ phi0).real)
    bound = alpha / gap
    report = GapLemmaReport(
        a0=a0,
        a1=a1,
        alpha=alpha,
        lhs=lhs,
        rhs=rhs,
        fidelity_deficit=deficit,
        fidelity_bound=bound,
        holds=lhs <= rhs + LEMMA_SLACK,
        fidelity_holds=deficit <= bound + LEMMA_SLACK,
    )
    if not (report.holds and report.fidelity_holds):
        log.error("gap lemma violated: lhs=%.6g rhs=%.6g deficit=%.6g bound=%.6g", lhs, rhs, deficit, bound)
    return report
