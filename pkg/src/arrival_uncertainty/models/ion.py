"""Effective two-level description of the trapped-ion detection scheme.

Level 2 is driven to a fast-decaying level 3 with Rabi frequency Omega23;
for ``|Omega23| << Gamma34`` adiabatic elimination of level 3 leaves a decay
of level 2 at ``gamma = Omega23^2 / Gamma34``. The reduction is trusted only
for ``|Omega23| <= Gamma34 / 5``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Tuple

import numpy as np

from arrival_uncertainty.core.absorption import AbsorptiveSystem
from arrival_uncertainty.core.errors import NonpositiveParameter, RegimeViolation
from arrival_uncertainty.core.linops import StateVector
from arrival_uncertainty.models.base import SystemModel
from arrival_uncertainty.models.two_level import OPTIMAL_RATIO, two_level

__all__ = ["IonScheme", "IonModel", "ion_effective", "optimal_omega23", "ADIABATIC_FACTOR"]

ADIABATIC_FACTOR = 5.0


@dataclass(frozen=True)
class IonScheme:
    """Angular frequencies in rad/s; ``q`` is the photon detection efficiency."""

    omega12: float
    omega23: float
    gamma34: float
    q: float = 1.0

    def __post_init__(self) -> None:
        for label in ("omega12", "omega23", "gamma34"):
            value = getattr(self, label)
            if not value > 0:
                raise NonpositiveParameter(f"{label} must be > 0, got {value}")
        if not 0.0 < self.q <= 1.0:
            raise NonpositiveParameter(f"detection efficiency q must lie in (0, 1], got {self.q}")

    @property
    def valid(self) -> bool:
        return abs(self.omega23) <= self.gamma34 / ADIABATIC_FACTOR

    @property
    def gamma(self) -> float:
        return self.omega23**2 / self.gamma34


def ion_effective(scheme: IonScheme, hbar: float = 1.0) -> Tuple[AbsorptiveSystem, StateVector]:
    """Two-level system with ``Omega = omega12`` and ``gamma = omega23^2 / gamma34``."""
    if not scheme.valid:
        raise RegimeViolation(
            f"|omega23|={scheme.omega23:.4g} exceeds gamma34/{ADIABATIC_FACTOR:g}={scheme.gamma34 / ADIABATIC_FACTOR:.4g}; "
            "adiabatic elimination does not apply"
        )
    return two_level(scheme.omega12, scheme.gamma, hbar)


def optimal_omega23(omega12: float, gamma34: float) -> float:
    """Coupling that puts the effective decay at ``sqrt(2) omega12``."""
    return float(np.sqrt(OPTIMAL_RATIO * omega12 * gamma34))


@dataclass(frozen=True)
class IonModel(SystemModel):
    omega12: float = 2 * np.pi * 100e3
    omega23: float = 2 * np.pi * 1.73e6
    gamma34: float = 2 * np.pi * 21.2e6
    q: float = 1.0

    name: ClassVar[str] = "ion"
    sweep_label: ClassVar[str] = "omega23"

    @property
    def scheme(self) -> IonScheme:
        return IonScheme(self.omega12, self.omega23, self.gamma34, self.q)

    def build(self, hbar: float = 1.0) -> Tuple[AbsorptiveSystem, StateVector]:
        return ion_effective(self.scheme, hbar)

    def sweep_value(self) -> float:
        return self.omega23

    def with_sweep_value(self, value: float) -> "IonModel":
        return IonModel(self.omega12, value, self.gamma34, self.q)
