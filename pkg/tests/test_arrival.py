"""
Contract tests for arrival-time moments, energy statistics and both uncertainty relations.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from arrival_uncertainty.core.absorption import dilute, make_system
from arrival_uncertainty.core.arrival import (
    arrival_moments,
    assumption_holds,
    density,
    density_curve,
    dilated_energy_stats,
    dilation_identity_residual,
    energy_stats,
    moments,
    survival_curve,
    uncertainty_report,
)
from arrival_uncertainty.core.errors import AssumptionViolated, ZeroAbsorption
from arrival_uncertainty.core.linops import StateVector
from arrival_uncertainty.models.random_system import random_system
from arrival_uncertainty.models.two_level import two_level

pytestmark = pytest.mark.contract

SQRT2 = np.sqrt(2.0)


def _two_level_second_moment(omega: float, gamma: float) -> float:
    mean = 2.0 / gamma + gamma / omega**2
    u = 1.0 / gamma + gamma / omega**2
    return 2.0 * (2.0 * mean / gamma + gamma * u / omega**2 - 2.0 / omega**2)


class TestDensity:
    def test_vanishes_at_zero_when_state_avoids_absorber(self, optimal_system):
        system, psi = optimal_system
        assert density(system, psi, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_integrates_to_one(self, optimal_system):
        system, psi = optimal_system
        mass, _ = quad(lambda t: density(system, psi, t), 0.0, 40.0, limit=200)
        assert mass == pytest.approx(1.0, abs=1e-9)

    def test_underdamped_density_has_nodes(self, optimal_system):
        # gamma < 2 omega: the absorbing amplitude oscillates at 1/sqrt(2)
        system, psi = optimal_system
        node = np.pi * SQRT2
        assert density(system, psi, node) == pytest.approx(0.0, abs=1e-12)
        assert density(system, psi, node / 2.0) > 0.1
        P = density_curve(system, psi, np.linspace(0.0, 12.0, 601))
        assert np.all(P >= 0.0)

    def test_survival_curve_in_unit_interval(self, optimal_system):
        system, psi = optimal_system
        S = survival_curve(system, psi, np.linspace(0.0, 10.0, 101))
        assert np.all((S >= 0.0) & (S <= 1.0))

    def test_zero_absorption_rejected(self):
        system = make_system(np.diag([1.0, -1.0]), np.zeros((2, 2)))
        with pytest.raises(ZeroAbsorption):
            density(system, StateVector(np.array([1.0, 0.0])), 1.0)


class TestMoments:
    @pytest.mark.parametrize("omega,gamma", [(2.0, 2.0 * SQRT2), (1.0, 1.0), (1.0, 5.0)])
    def test_two_level_mean_closed_form(self, omega, gamma):
        system, psi = two_level(omega, gamma)
        assert moments(system, psi, 1) == pytest.approx(2.0 / gamma + gamma / omega**2, rel=1e-10)

    @pytest.mark.parametrize("omega,gamma", [(2.0, 2.0 * SQRT2), (1.0, 1.0), (1.0, 5.0), (3.0, 0.5)])
    def test_two_level_second_moment_closed_form(self, omega, gamma):
        system, psi = two_level(omega, gamma)
        assert moments(system, psi, 2) == pytest.approx(_two_level_second_moment(omega, gamma), rel=1e-9)

    def test_exceptional_point(self):
        # gamma = 2 omega: K is defective and has no eigenbasis
        system, psi = two_level(2.0, 4.0)
        first, second = arrival_moments(system, psi)
        assert first == pytest.approx(1.5, rel=1e-9)
        assert second == pytest.approx(3.0, rel=1e-9)
        first_q, second_q = arrival_moments(system, psi, method="quadrature")
        assert first_q == pytest.approx(1.5, rel=1e-7)
        assert second_q == pytest.approx(3.0, rel=1e-7)

    @pytest.mark.parametrize("gamma", [4.0 * (1.0 - 1e-7), 4.0 * (1.0 + 1e-4)])
    def test_near_exceptional_point(self, gamma):
        system, psi = two_level(2.0, gamma)
        first, second = arrival_moments(system, psi)
        assert first == pytest.approx(2.0 / gamma + gamma / 4.0, rel=1e-9)
        assert second == pytest.approx(_two_level_second_moment(2.0, gamma), rel=1e-9)

    @pytest.mark.parametrize("method", ["closed_form", "quadrature"])
    def test_slow_decay(self, method):
        # mean arrival time 2000 against an oscillation period of pi
        system, psi = two_level(2.0, 1e-3)
        first, second = arrival_moments(system, psi, method=method)
        assert first == pytest.approx(2000.00025, rel=1e-7)
        assert second == pytest.approx(8000000.5, rel=1e-7)
        assert dilation_identity_residual(system, psi, method=method) < 1e-6

    def test_methods_agree_on_random_systems(self, random_systems):
        for system, psi in random_systems(6):
            closed = arrival_moments(system, psi)
            quadrature = arrival_moments(system, psi, method="quadrature")
            assert quadrature == pytest.approx(closed, rel=1e-7)

    def test_quadrature_agrees_with_closed_form(self, optimal_system):
        system, psi = optimal_system
        for n in (1, 2):
            assert moments(system, psi, n, method="quadrature") == pytest.approx(
                moments(system, psi, n), abs=1e-5
            )

    def test_constant_absorber_moments(self, constant_system):
        system, psi = constant_system
        assert moments(system, psi, 1) == pytest.approx(1.0, rel=1e-10)
        assert moments(system, psi, 2) == pytest.approx(2.0, rel=1e-10)

    def test_unsupported_order(self, optimal_system):
        system, psi = optimal_system
        with pytest.raises(ValueError):
            moments(system, psi, 3)

    def test_unknown_method(self, optimal_system):
        system, psi = optimal_system
        with pytest.raises(ValueError):
            moments(system, psi, 1, method="monte_carlo")


class TestEnergyStats:
    def test_two_level_spread_is_half_omega(self, optimal_system):
        system, psi = optimal_system
        mean, spread = energy_stats(system, psi)
        assert mean == pytest.approx(0.0, abs=1e-15)
        assert spread == pytest.approx(1.0, abs=1e-15)

    def test_dilated_spread_bounded_by_physical(self, random_systems):
        for system, psi in random_systems(10):
            stats = uncertainty_report(system, psi)
            _mean, spread = energy_stats(system, psi)
            _mean_hat, spread_hat = dilated_energy_stats(system, psi)
            assert spread >= np.sqrt(stats.p) * spread_hat - 1e-9


class TestUncertaintyReport:
    def test_optimal_two_level_values(self, optimal_system):
        system, psi = optimal_system
        stats = uncertainty_report(system, psi)
        assert stats.p == pytest.approx(1.0, abs=1e-12)
        assert stats.std_T * stats.std_E == pytest.approx(1.0 / SQRT2, abs=1e-6)
        assert stats.mean_T * stats.std_E == pytest.approx(SQRT2, abs=1e-6)
        assert stats.ratio_var == pytest.approx(SQRT2, abs=1e-6)
        assert stats.ratio_mean == pytest.approx(1.0277, abs=1e-4)
        assert stats.relations_hold
        assert stats.method == "closed_form"

    def test_quadrature_path_agrees(self, optimal_system):
        system, psi = optimal_system
        closed = uncertainty_report(system, psi)
        quadrature = uncertainty_report(system, psi, method="quadrature")
        assert quadrature.ratio_var == pytest.approx(closed.ratio_var, abs=1e-5)
        assert quadrature.ratio_mean == pytest.approx(closed.ratio_mean, abs=1e-5)

    def test_relations_hold_on_random_systems(self, random_systems):
        for system, psi in random_systems(20):
            stats = uncertainty_report(system, psi)
            assert stats.ratio_var > 1.0
            assert stats.ratio_mean >= 1.0 - 1e-9
            assert stats.violations == ()

    def test_ratios_unchanged_by_dilution(self, optimal_system):
        system, psi = optimal_system
        base = uncertainty_report(system, psi)
        extended, psi2 = dilute(system, psi, 0.3)
        diluted = uncertainty_report(extended, psi2)
        assert diluted.p == pytest.approx(0.3, abs=1e-9)
        assert diluted.ratio_var == pytest.approx(base.ratio_var, rel=1e-7)
        assert diluted.ratio_mean == pytest.approx(base.ratio_mean, rel=1e-7)

    def test_constant_absorber_violates_assumption(self, constant_system):
        system, psi = constant_system
        assert not assumption_holds(system, psi)
        with pytest.raises(AssumptionViolated) as exc:
            uncertainty_report(system, psi)
        report = exc.value.report
        assert report is not None
        assert not report.assumption_holds
        assert report.mean_T == pytest.approx(1.0, rel=1e-10)

    def test_lenient_mode_returns_flagged_report(self, constant_system):
        system, psi = constant_system
        stats = uncertainty_report(system, psi, strict=False)
        assert not stats.assumption_holds
        assert not stats.relations_hold

    def test_dilation_identity_residual(self, optimal_system):
        system, psi = optimal_system
        stats = uncertainty_report(system, psi, check_dilation=True)
        assert stats.dilation_residual is not None
        assert stats.dilation_residual < 1e-6

    def test_as_dict_carries_epsilons(self, optimal_system):
        system, psi = optimal_system
        data = uncertainty_report(system, psi).as_dict()
        assert data["epsilon_var"] == pytest.approx(SQRT2 - 1.0, abs=1e-6)
        assert data["violations"] == []

    @pytest.mark.parametrize("method", ["closed_form", "quadrature"])
    def test_dilation_residual_on_random_systems(self, random_systems, method):
        for system, psi in random_systems(5):
            assert dilation_identity_residual(system, psi, method=method) < 1e-8


class TestScaling:
    @pytest.mark.parametrize("c", [0.25, 3.0])
    def test_moments_scale_with_inverse_rate(self, c):
        system, psi = random_system(4, 2, seed=31)
        scaled = make_system(c * system.H, c * system.D, system.hbar)
        first, second = arrival_moments(system, psi)
        first_c, second_c = arrival_moments(scaled, psi)
        assert first_c == pytest.approx(first / c, rel=1e-9)
        assert second_c == pytest.approx(second / c**2, rel=1e-9)
        assert survival_curve(scaled, psi, np.array([1.0, 2.0])) == pytest.approx(
            survival_curve(system, psi, np.array([c, 2.0 * c])), abs=1e-12
        )
