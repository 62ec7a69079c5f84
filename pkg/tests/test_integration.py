"""End-to-end reproduction runs over the shipped configurations.

Each class follows one published number or property from configuration file
to reported value. Heavy runs carry the ``slow`` marker; run them with
``pytest -m slow``.
"""
import json

import numpy as np
import pytest
from scipy import special

from arrival_uncertainty.cli.main import run_main
from arrival_uncertainty.config.system_config import load_config
from arrival_uncertainty.core.arrival import density_function, uncertainty_report
from arrival_uncertainty.core.groundstate import (
    Grid,
    oscillator_spectrum,
    wall_linear_ground_state,
    wall_linear_spectrum,
)
from arrival_uncertainty.core.minimality import FitTarget, airy_negative_zeros, constants, fit_minimal
from arrival_uncertainty.core.verification import run_battery
from arrival_uncertainty.models.sampling import ks_compare, quantum_jump_sample


def _cli_json(capsys, argv):
    code = run_main([*argv, "--no-save"])
    return code, json.loads(capsys.readouterr().out)


class TestTwoLevelOptimum:
    def test_products_closed_form_and_quadrature(self, configs_dir):
        system, psi = load_config(configs_dir / "optimal_two_level.yaml").build()
        closed = uncertainty_report(system, psi)
        assert closed.std_T * closed.std_E == pytest.approx(0.7071068, abs=1e-6)
        assert closed.mean_T * closed.std_E == pytest.approx(1.4142136, abs=1e-6)
        quadrature = uncertainty_report(system, psi, method="quadrature")
        assert quadrature.std_T * quadrature.std_E == pytest.approx(closed.std_T * closed.std_E, abs=1e-5)
        assert quadrature.mean_T * quadrature.std_E == pytest.approx(closed.mean_T * closed.std_E, abs=1e-5)
        # both products exceed their bounds: 0.707 > 0.500 and 1.414 > 1.376
        assert closed.std_T * closed.std_E > 0.5
        assert closed.mean_T * closed.std_E > constants().C


class TestConstants:
    def test_published_digits(self):
        c = constants()
        assert round(c.C, 3) == 1.376
        assert round(c.gamma_airy, 3) == 1.888
        z1, z2 = airy_negative_zeros(2)
        assert round(z1, 10) == -2.3381074105
        assert round(z2, 10) == -4.0879494441
        assert c.C == pytest.approx(2.0 * (-z1 / 3.0) ** 1.5, abs=1e-12)


class TestGroundStateSolver:
    def test_reference_grids(self):
        np.testing.assert_allclose(oscillator_spectrum(Grid.symmetric(10.0, 2000), 2), [1.0, 3.0], atol=1e-4)
        wall = Grid.wall(20.0, 4000)
        np.testing.assert_allclose(
            wall_linear_spectrum(wall, 2, extrapolate=True), [2.3381074, 4.0879494], atol=1e-5
        )
        t, v = wall_linear_ground_state(wall)
        ref = special.airy(t - 2.338107410459767)[0]
        ref /= np.sqrt(np.sum(ref**2) * wall.spacing)
        assert np.max(np.abs(v - ref)) < 1e-4


class TestOptimalDensityReproduction:
    def test_density_and_airy_certificate_with_baseline(self, configs_dir, tmp_path, capsys):
        config = str(configs_dir / "optimal_two_level.yaml")
        code, density = _cli_json(capsys, ["density", "--config", config])
        assert code == 0
        assert density["rows"][0]["P"] == pytest.approx(0.0, abs=1e-15)
        assert density["outputs"]["unimodal"] is True

        baseline = tmp_path / "optimal_baseline.json"
        argv = ["fit", "--config", config, "--kind", "airy", "--baseline", str(baseline)]
        code, first = _cli_json(capsys, argv)
        assert code == 0
        airy_fit = first["outputs"]["fits"]["airy"]
        assert airy_fit["distance"] <= 0.314
        assert airy_fit["bound"] == pytest.approx(0.314, abs=1e-3)
        assert baseline.is_file()

        code, second = _cli_json(capsys, argv)
        assert code == 0
        assert second["outputs"]["baseline"]["within_tolerance"] is True


class TestIonScheme:
    def test_effective_parameters(self, configs_dir):
        config = load_config(configs_dir / "ion.yaml")
        scheme = config.model_instance().scheme
        ratio = scheme.gamma / scheme.omega12
        assert ratio == pytest.approx(1.4118, abs=1e-4)
        assert ratio == pytest.approx(np.sqrt(2.0), rel=2e-3)
        system, psi = config.build()
        stats = uncertainty_report(system, psi)
        optimum = np.sqrt(2.0) / constants().C
        assert stats.ratio_mean == pytest.approx(optimum, rel=1e-3)


@pytest.mark.slow
class TestRandomizedSuites:
    def test_theorem_battery(self):
        summary = run_battery(count=500, dims=(2, 8), seed=0, gap_instances=0, jobs=4)
        assert summary.passed, summary.failures
        counts = summary.certificate_counts()
        for kind in ("gaussian", "airy"):
            assert counts[kind].get("violated", 0) == 0

    def test_gap_lemma_battery(self):
        summary = run_battery(count=0, seed=0, gap_instances=2000)
        assert summary.passed
        assert len(summary.gaps) == 2000


@pytest.mark.slow
@pytest.mark.montecarlo
class TestMonteCarloConsistency:
    @pytest.mark.parametrize("q", [1.0, 0.5])
    def test_first_jump_samples_match_density(self, optimal_system, q):
        system, psi = optimal_system
        samples = quantum_jump_sample(system, psi, n=100_000, q=q, seed=20240601, jobs=4)
        assert ks_compare(samples, system, psi).verdict == "pass"


class TestFitDirect:
    def test_airy_fit_from_library(self, optimal_system):
        system, psi = optimal_system
        stats = uncertainty_report(system, psi)
        fit = fit_minimal(density_function(system, psi, stats.p), "airy", FitTarget.from_stats("airy", stats))
        assert fit.satisfied
        assert not fit.boundary_hit
