"""Random absorptive systems whose initial state never touches the absorber.

H is drawn from the Gaussian unitary ensemble at unit scale; D has random
orthonormal eigenvectors with weights in (0, 2] on a subspace of dimension
``dim - kernel_dim``; psi is a random unit vector in the kernel of D.
Everything is reproducible from the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Optional, Tuple

import numpy as np

from arrival_uncertainty.core.absorption import AbsorptiveSystem, make_system
from arrival_uncertainty.core.errors import DimensionMismatch
from arrival_uncertainty.core.linops import StateVector, random_unitary
from arrival_uncertainty.models.base import SystemModel
from arrival_uncertainty.utils.rng import make_rng

__all__ = [
    "random_hermitian",
    "random_density_matrix",
    "random_system",
    "RandomModel",
    "MAX_RANDOM_DIM",
]

MAX_RANDOM_DIM = 16


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """GUE sample ``(A + A^*) / 2`` with ``A`` complex Ginibre."""
    A = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    return scale * 0.5 * (A + A.conj().T)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """``G G^* / tr(G G^*)`` for a complex Ginibre ``G`` of shape ``dim x rank``."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise DimensionMismatch(f"rank must lie in [1, {dim}], got {rank}")
    G = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = G @ G.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def random_system(dim: int, kernel_dim: int, seed: int, hbar: float = 1.0) -> Tuple[AbsorptiveSystem, StateVector]:
    if not 2 <= dim <= MAX_RANDOM_DIM:
        raise DimensionMismatch(f"dim must lie in [2, {MAX_RANDOM_DIM}], got {dim}")
    if not 1 <= kernel_dim <= dim - 1:
        raise DimensionMismatch(f"kernel_dim must lie in [1, {dim - 1}], got {kernel_dim}")
    rng = make_rng(seed)
    H = random_hermitian(dim, rng)
    Q = random_unitary(dim, rng)
    kernel, detected = Q[:, :kernel_dim], Q[:, kernel_dim:]
    weights = 2.0 - rng.uniform(0.0, 2.0, size=dim - kernel_dim)
    D = (detected * weights) @ detected.conj().T
    coeffs = rng.standard_normal(kernel_dim) + 1j * rng.standard_normal(kernel_dim)
    psi = StateVector.normalized(kernel @ coeffs)
    return make_system(H, 0.5 * (D + D.conj().T), hbar), psi


@dataclass(frozen=True)
class RandomModel(SystemModel):
    dim: int = 4
    kernel_dim: int = 2
    seed: int = 0

    name: ClassVar[str] = "random"

    def build(self, hbar: float = 1.0) -> Tuple[AbsorptiveSystem, StateVector]:
        return random_system(self.dim, self.kernel_dim, self.seed, hbar)
