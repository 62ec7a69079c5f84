"""Dense complex linear algebra shared by the absorption and arrival modules.

Design goals:
  * Value semantics: every function takes arrays and returns new arrays.
  * Non-normal eigendecompositions report their conditioning so callers can
    decide between closed-form propagation and ODE integration.
  * Deterministic eigenvalue order so closed-form moment sums reproduce bitwise.

Public surface:
  * spectral_factorize(M) -> SpectralFactorization
  * propagator(factorization, t, hbar) -> exp(-i M t / hbar)
  * psd_sqrt(A) -> Hermitian square root
  * trace_norm(X) -> sum of singular values
  * StateVector -- normalized initial state
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.linalg as sla

from arrival_uncertainty.core.errors import DefectiveMatrix, DimensionMismatch, NotPositive
from arrival_uncertainty.utils.logger import get_logger

__all__ = [
    "ComplexMatrix",
    "SpectralFactorization",
    "StateVector",
    "as_matrix",
    "is_hermitian",
    "spectral_factorize",
    "propagator",
    "psd_sqrt",
    "trace_norm",
    "random_unitary",
    "DEFAULT_CONDITION_CAP",
]

log = get_logger(__name__)

ComplexMatrix = np.ndarray
DEFAULT_CONDITION_CAP = 1e8
RECONSTRUCTION_RTOL = 1e-10
STATE_NORM_TOL = 1e-12
PSD_CLAMP = 1e-12
PSD_REJECT = 1e-8

ArrayLike = Union[np.ndarray, Sequence[Sequence[complex]]]


def as_matrix(M: ArrayLike, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite square complex128 array."""
    arr = np.array(M, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def is_hermitian(M: np.ndarray, rtol: float = 1e-12) -> bool:
    """True when ``||M - M^*|| <= rtol * max(1, ||M||)`` (Frobenius norms)."""
    scale = max(1.0, float(np.linalg.norm(M)))
    return float(np.linalg.norm(M - M.conj().T)) <= rtol * scale


@dataclass(frozen=True, eq=False)
class SpectralFactorization:
    """Eigen-triple ``M = V diag(eigenvalues) V^-1``.

    ``condition`` is ``||V||_2 * ||V^-1||_2``; it is 1 for normal matrices and
    blows up near exceptional points.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    inverse_vectors: np.ndarray
    condition: float

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.right_vectors * self.eigenvalues) @ self.inverse_vectors


def spectral_factorize(M: ArrayLike, condition_cap: float = DEFAULT_CONDITION_CAP) -> SpectralFactorization:
    """Eigendecompose a (generally non-normal) square matrix.

    Eigenvalues are sorted by imaginary part descending, then real part ascending.

    Raises
    ------
    DefectiveMatrix
        If the eigenvector basis condition exceeds ``condition_cap`` or the
        reconstruction residual is out of tolerance.
    """
    A = as_matrix(M)
    w, V = sla.eig(A)
    # Round the sort keys so roundoff-level imaginary parts do not reorder real spectra.
    scale = max(float(np.max(np.abs(w))), 1.0)
    order = np.lexsort((np.round(w.real / scale, 10), np.round(-w.imag / scale, 10)))
    w = w[order]
    V = V[:, order]
    try:
        V_inv = sla.inv(V)
    except (sla.LinAlgError, ValueError) as e:
        raise DefectiveMatrix(f"eigenvector matrix is singular: {e}") from e
    condition = float(np.linalg.norm(V, 2) * np.linalg.norm(V_inv, 2))
    if not np.isfinite(condition) or condition > condition_cap:
        raise DefectiveMatrix(
            f"eigenvector condition {condition:.3e} exceeds cap {condition_cap:.1e}; use ODE propagation",
            condition=condition,
        )
    fac = SpectralFactorization(eigenvalues=w, right_vectors=V, inverse_vectors=V_inv, condition=condition)
    scale = max(float(np.linalg.norm(A, 2)), np.finfo(float).tiny)
    residual = float(np.linalg.norm(fac.reconstruct() - A, 2))
    if residual > RECONSTRUCTION_RTOL * condition * scale:
        raise DefectiveMatrix(
            f"reconstruction residual {residual:.3e} exceeds {RECONSTRUCTION_RTOL:.0e} * condition * ||M||",
            condition=condition,
        )
    log.debug("factorized dim=%d condition=%.3e residual=%.3e", A.shape[0], condition, residual)
    return fac


def propagator(
    factorization: SpectralFactorization, t: Union[float, Iterable[float]], hbar: float = 1.0
) -> np.ndarray:
    """Return ``exp(-i M t / hbar)`` for scalar ``t`` or a stack for an array of times."""
    times = np.asarray(t, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(times, factorization.eigenvalues) / hbar)
    V, V_inv = factorization.right_vectors, factorization.inverse_vectors
    if times.ndim == 0:
        return (V * phases) @ V_inv
    return np.einsum("ij,tj,jk->tik", V, phases, V_inv)


def psd_sqrt(A: ArrayLike) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix.

    Eigenvalues in ``[-1e-8, 0)`` (relative to ``max(1, ||A||)``) are clamped
    to zero; anything more negative, or a non-Hermitian input, is rejected.
    """
    M = as_matrix(A)
    if not is_hermitian(M):
        raise NotPositive("psd_sqrt requires a Hermitian matrix")
    M = 0.5 * (M + M.conj().T)
    w, U = np.linalg.eigh(M)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[0] < -PSD_REJECT * scale:
        raise NotPositive(f"matrix has negative eigenvalue {w[0]:.3e}")
    if w[0] < -PSD_CLAMP * scale:
        log.debug("clamping eigenvalue %.3e to zero in psd_sqrt", w[0])
    w = np.clip(w, 0.0, None)
    S = (U * np.sqrt(w)) @ U.conj().T
    return 0.5 * (S + S.conj().T)


def trace_norm(X: ArrayLike) -> float:
    """Sum of the singular values of ``X``."""
    M = as_matrix(X)
    return float(np.sum(sla.svdvals(M)))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized complex amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size == 0 or not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be a non-empty finite vector")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > STATE_NORM_TOL:
            raise ValueError(f"state vector must have unit norm (got {norm:.15f})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, values: Iterable[complex]) -> "StateVector":
        """Build a state from arbitrary non-zero amplitudes, rescaling to unit norm."""
        amps = np.asarray(values, dtype=np.complex128).reshape(-1)
        norm = float(np.linalg.norm(amps))
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.shape[0])

    def __array__(self, dtype=None, copy=None):  # pragma: no cover (numpy protocol)
        return np.asarray(self.amplitudes, dtype=dtype)
