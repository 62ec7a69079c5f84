from arrival_uncertainty.core.absorption import dilute
from arrival_uncertainty.models.base import SystemModel
from arrival_uncertainty.models.constant import ConstantAbsorberModel, constant_absorber
from arrival_uncertainty.models.ion import IonModel, IonScheme, ion_effective, optimal_omega23
from arrival_uncertainty.models.random_system import (
    RandomModel,
    random_density_matrix,
    random_hermitian,
    random_system,
)
from arrival_uncertainty.models.sampling import KSResult, SampleSet, ks_compare, quantum_jump_sample
from arrival_uncertainty.models.two_level import TwoLevelModel, two_level

__all__ = [
    "SystemModel",
    "TwoLevelModel",
    "ConstantAbsorberModel",
    "IonModel",
    "RandomModel",
    "IonScheme",
    "two_level",
    "constant_absorber",
    "ion_effective",
    "optimal_omega23",
    "random_system",
    "random_hermitian",
    "random_density_matrix",
    "dilute",
    "SampleSet",
    "KSResult",
    "quantum_jump_sample",
    "ks_compare",
]
