"""Constant absorber ``K = H - i alpha``: arrival times are exponential for every state.

Since ``D psi = hbar alpha psi`` never vanishes, these systems only serve as
negative cases for the uncertainty relations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, ClassVar, Optional, Sequence, Tuple

import numpy as np

from arrival_uncertainty.core.absorption import AbsorptiveSystem, make_system
from arrival_uncertainty.core.errors import NonpositiveParameter
from arrival_uncertainty.core.linops import StateVector, as_matrix
from arrival_uncertainty.models.base import SystemModel

__all__ = ["constant_absorber", "ConstantAbsorberModel"]


def constant_absorber(H: Any, alpha: float, hbar: float = 1.0) -> AbsorptiveSystem:
    """System with ``D = hbar alpha 1``, so that ``S(t) = exp(-2 alpha t)``."""
    if not alpha > 0:
        raise NonpositiveParameter(f"alpha must be > 0, got {alpha}")
    H = as_matrix(H, "H")
    return make_system(H, hbar * alpha * np.eye(H.shape[0], dtype=np.complex128), hbar)


@dataclass(frozen=True)
class ConstantAbsorberModel(SystemModel):
    H: Sequence[Sequence[complex]] = field(default_factory=lambda: [[0.0, 1.0], [1.0, 0.0]])
    alpha: float = 0.5
    psi: Optional[Sequence[complex]] = None

    name: ClassVar[str] = "constant"

    def build(self, hbar: float = 1.0) -> Tuple[AbsorptiveSystem, StateVector]:
        system = constant_absorber(self.H, self.alpha, hbar)
        if self.psi is None:
            amplitudes = np.zeros(system.dim, dtype=np.complex128)
            amplitudes[0] = 1.0
            return system, StateVector(amplitudes)
        return system, StateVector.normalized(self.psi)
