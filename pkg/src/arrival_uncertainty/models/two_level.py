"""Two-level system with one absorbing level.

``H = (hbar/2) [[0, Omega], [Omega, 0]]`` couples the initial level to a
second level that decays at rate gamma: ``D = (hbar gamma / 2) |2><2|``.
The initial state ``(1, 0)`` has ``D psi = 0`` exactly. Both ``<T> Delta E``
and ``Delta T Delta E`` are smallest at ``gamma = sqrt(2) Omega``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Tuple

import numpy as np

from arrival_uncertainty.core.absorption import AbsorptiveSystem, make_system
from arrival_uncertainty.core.errors import NonpositiveParameter
from arrival_uncertainty.core.linops import StateVector
from arrival_uncertainty.models.base import SystemModel

__all__ = ["two_level", "TwoLevelModel", "OPTIMAL_RATIO"]

OPTIMAL_RATIO = float(np.sqrt(2.0))


def two_level(omega: float, gamma: float, hbar: float = 1.0) -> Tuple[AbsorptiveSystem, StateVector]:
    if not omega > 0:
        raise NonpositiveParameter(f"omega must be > 0, got {omega}")
    if not gamma > 0:
        raise NonpositiveParameter(f"gamma must be > 0, got {gamma}")
    H = 0.5 * hbar * np.array([[0.0, omega], [omega, 0.0]], dtype=np.complex128)
    D = 0.5 * hbar * np.array([[0.0, 0.0], [0.0, gamma]], dtype=np.complex128)
    return make_system(H, D, hbar), StateVector(np.array([1.0, 0.0]))


@dataclass(frozen=True)
class TwoLevelModel(SystemModel):
    omega: float = 2.0
    gamma: float = 2.0 * OPTIMAL_RATIO

    name: ClassVar[str] = "two_level"
    sweep_label: ClassVar[str] = "gamma/omega"

    def build(self, hbar: float = 1.0) -> Tuple[AbsorptiveSystem, StateVector]:
        return two_level(self.omega, self.gamma, hbar)

    def sweep_value(self) -> float:
        return self.gamma / self.omega

    def with_sweep_value(self, value: float) -> "TwoLevelModel":
        return TwoLevelModel(omega=self.omega, gamma=value * self.omega)
