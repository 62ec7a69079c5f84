"""
Tests for the system models: two-level, constant absorber, effective ion scheme
and seeded random systems.
"""

import numpy as np
import pytest

from arrival_uncertainty.core.arrival import moments, uncertainty_report
from arrival_uncertainty.core.errors import DimensionMismatch, NonpositiveParameter, RegimeViolation
from arrival_uncertainty.models import (
    ConstantAbsorberModel,
    IonModel,
    IonScheme,
    RandomModel,
    TwoLevelModel,
    constant_absorber,
    ion_effective,
    optimal_omega23,
    random_system,
    two_level,
)

SQRT2 = np.sqrt(2.0)


@pytest.mark.unit
class TestTwoLevel:
    def test_state_avoids_absorber(self):
        system, psi = two_level(1.0, 3.0)
        np.testing.assert_allclose(system.D @ psi.amplitudes, 0.0)

    @pytest.mark.parametrize("ratio", [0.5, 1.0, 3.0])
    def test_mean_energy_product(self, ratio):
        system, psi = two_level(2.0, 2.0 * ratio)
        stats = uncertainty_report(system, psi)
        assert stats.mean_T * stats.std_E == pytest.approx(1.0 / ratio + ratio / 2.0, rel=1e-9)

    def test_hbar_scales_times(self):
        system, psi = two_level(2.0, 2.0 * SQRT2, hbar=1.0)
        scaled, psi2 = two_level(2.0, 2.0 * SQRT2, hbar=3.0)
        assert moments(scaled, psi2, 1) == pytest.approx(moments(system, psi, 1), rel=1e-10)
        stats = uncertainty_report(scaled, psi2)
        assert stats.ratio_var == pytest.approx(SQRT2, abs=1e-6)

    def test_nonpositive_parameters(self):
        with pytest.raises(NonpositiveParameter):
            two_level(0.0, 1.0)
        with pytest.raises(NonpositiveParameter):
            two_level(1.0, -1.0)

    def test_sweep_value_round_trip(self):
        model = TwoLevelModel(omega=2.0, gamma=3.0)
        assert model.sweep_value() == pytest.approx(1.5)
        moved = model.with_sweep_value(SQRT2)
        assert moved.gamma == pytest.approx(2.0 * SQRT2)
        assert moved.omega == 2.0


@pytest.mark.unit
class TestConstantAbsorber:
    def test_exponential_survival(self, constant_system):
        system, psi = constant_system
        assert moments(system, psi, 1) == pytest.approx(1.0)

    def test_alpha_must_be_positive(self):
        with pytest.raises(NonpositiveParameter):
            constant_absorber(np.eye(2), 0.0)

    def test_explicit_state_is_normalized(self):
        system, psi = ConstantAbsorberModel(psi=[1.0, 1.0]).build()
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0)
        assert system.dim == 2


@pytest.mark.unit
class TestIon:
    def test_effective_ratio_near_optimum(self):
        scheme = IonModel().scheme
        assert scheme.valid
        assert scheme.gamma / scheme.omega12 == pytest.approx(1.41175, abs=1e-4)

    def test_relations_close_to_two_level_optimum(self):
        system, psi = IonModel().build()
        stats = uncertainty_report(system, psi)
        assert stats.mean_T * stats.std_E == pytest.approx(SQRT2, rel=1e-3)
        assert stats.ratio_var == pytest.approx(SQRT2, rel=1e-3)

    def test_optimal_coupling(self):
        omega23 = optimal_omega23(1.0, 100.0)
        assert IonScheme(1.0, omega23, 100.0).gamma == pytest.approx(SQRT2)

    def test_regime_violation(self):
        with pytest.raises(RegimeViolation, match="adiabatic"):
            ion_effective(IonScheme(omega12=1.0, omega23=30.0, gamma34=100.0))

    def test_invalid_scheme_parameters(self):
        with pytest.raises(NonpositiveParameter):
            IonScheme(omega12=1.0, omega23=1.0, gamma34=0.0)
        with pytest.raises(NonpositiveParameter, match="efficiency"):
            IonScheme(omega12=1.0, omega23=1.0, gamma34=100.0, q=1.5)


@pytest.mark.unit
class TestRandomSystem:
    @pytest.mark.parametrize("dim,kernel_dim", [(2, 1), (5, 2), (8, 7)])
    def test_state_in_kernel_of_absorber(self, dim, kernel_dim):
        system, psi = random_system(dim, kernel_dim, seed=3)
        assert system.dim == dim
        assert np.linalg.norm(system.D @ psi.amplitudes) < 1e-12
        assert np.linalg.matrix_rank(system.D, tol=1e-10) == dim - kernel_dim

    def test_reproducible_from_seed(self):
        a, psi_a = random_system(4, 2, seed=11)
        b, psi_b = random_system(4, 2, seed=11)
        c, _ = random_system(4, 2, seed=12)
        np.testing.assert_array_equal(a.H, b.H)
        np.testing.assert_array_equal(psi_a.amplitudes, psi_b.amplitudes)
        assert not np.allclose(a.H, c.H)

    def test_dimension_limits(self):
        with pytest.raises(DimensionMismatch):
            random_system(1, 1, seed=0)
        with pytest.raises(DimensionMismatch):
            random_system(4, 4, seed=0)

    def test_model_defaults(self):
        system, _ = RandomModel().build()
        assert system.dim == 4


@pytest.mark.unit
class TestModelParameters:
    def test_with_parameters_rejects_unknown(self):
        with pytest.raises(TypeError, match="unknown parameter"):
            TwoLevelModel().with_parameters(delta=1.0)

    def test_parameters_are_plain_dict(self):
        assert TwoLevelModel(omega=1.0, gamma=2.0).parameters() == {"omega": 1.0, "gamma": 2.0}

    def test_models_without_sweep(self):
        with pytest.raises(NotImplementedError):
            RandomModel().sweep_value()
