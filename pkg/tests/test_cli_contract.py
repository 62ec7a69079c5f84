"""
Test the CLI interface requirements and behavior.

These tests define how the ``arrival`` command-line interface SHOULD behave:
subcommands, global flags, output formats and the exit-code contract
(0 success, 1 numerical/config error or failed check, 2 assumption violated).
"""
import json

import pytest

from arrival_uncertainty.cli.main import COMMANDS, build_argument_parser, main, run_main
from arrival_uncertainty.config.system_config import config_digest, load_config

pytestmark = pytest.mark.contract


def run_json(capsys, argv):
    """Run the CLI without saving and parse the JSON record it prints."""
    code = run_main([*argv, "--no-save"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestCLIModuleExistence:
    """Test that every subcommand is wired in."""

    def test_subcommands_registered(self):
        """Every command module MUST expose HELP, add_arguments and run."""
        assert set(COMMANDS) == {"report", "density", "sweep", "montecarlo", "verify", "groundstate", "fit"}
        for module in COMMANDS.values():
            assert module.HELP
            assert callable(module.add_arguments) and callable(module.run)

    def test_global_flags_on_every_subcommand(self):
        parser = build_argument_parser()
        for name in COMMANDS:
            args = parser.parse_args([name, "--seed", "3", "--format", "csv", "--jobs", "2"] + _required(name))
            assert (args.seed, args.output_format, args.jobs) == (3, "csv", 2)

    def test_help_and_version_exit(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_main(["--help"])
        assert exc.value.code == 0
        with pytest.raises(SystemExit) as exc:
            run_main(["--version"])
        assert exc.value.code == 0
        assert "arrival" in capsys.readouterr().out

    def test_usage_errors_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            run_main(["teleport"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            run_main(["verify", "--dims", "two-eight"])
        assert exc.value.code == 2

    def test_main_raises_system_exit(self, configs_dir, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["report", "--config", str(configs_dir / "optimal_two_level.yaml"), "--no-save"])
        assert exc.value.code == 0


def _required(name):
    return ["--start", "1", "--stop", "2"] if name == "sweep" else []


class TestReportCommand:
    """``arrival report`` MUST follow the exit-code contract."""

    def test_optimal_two_level(self, configs_dir, capsys):
        code, record = run_json(capsys, ["report", "--config", str(configs_dir / "optimal_two_level.yaml")])
        assert code == 0
        outputs = record["outputs"]
        assert outputs["status"] == "ok"
        assert outputs["relations_hold"] is True
        assert outputs["std_T"] * outputs["std_E"] == pytest.approx(0.7071068, abs=1e-6)
        assert outputs["mean_T"] * outputs["std_E"] == pytest.approx(1.4142136, abs=1e-6)
        assert outputs["ground_state_bounds"]["holds"] is True
        assert record["command"] == "report"
        assert len(record["digest"]) == 64

    def test_explicit_matrices_give_same_digest(self, configs_dir, capsys):
        _, a = run_json(capsys, ["report", "--config", str(configs_dir / "optimal_two_level.yaml")])
        _, b = run_json(capsys, ["report", "--config", str(configs_dir / "two_level_explicit.yaml")])
        assert a["digest"] == b["digest"]
        assert a["outputs"]["ratio_var"] == pytest.approx(b["outputs"]["ratio_var"], abs=1e-12)

    def test_quadrature_with_dilation_check(self, configs_dir, capsys):
        code, record = run_json(
            capsys,
            ["report", "--config", str(configs_dir / "optimal_two_level.yaml"), "--method", "quadrature", "--check-dilation"],
        )
        assert code == 0
        assert record["outputs"]["method"] == "quadrature"
        assert record["outputs"]["dilation_residual"] < 1e-6

    def test_assumption_violated_exits_two(self, configs_dir, capsys):
        code, record = run_json(capsys, ["report", "--config", str(configs_dir / "constant.yaml")])
        assert code == 2
        assert record["outputs"]["status"] == "assumption_violated"
        assert record["outputs"]["mean_T"] == pytest.approx(1.0)

    def test_invalid_absorber_exits_one(self, configs_dir, capsys):
        code, record = run_json(capsys, ["report", "--config", str(configs_dir / "negative_d.yaml")])
        assert code == 1
        assert record is None

    def test_config_problems_exit_one(self, tmp_path, write_config, capsys):
        assert run_main(["report", "--no-save"]) == 1
        assert run_main(["report", "--config", str(tmp_path / "absent.yaml"), "--no-save"]) == 1
        bad = write_config("H: [[0, 1], [1, 0]]\nD: [[0, 0], [0, 1]]\npsi: [1, x]\n")
        assert run_main(["report", "--config", str(bad), "--no-save"]) == 1

    def test_shipped_config_by_name(self, configs_dir, capsys):
        _, by_path = run_json(capsys, ["report", "--config", str(configs_dir / "optimal_two_level.yaml")])
        code, by_name = run_json(capsys, ["report", "--config", "optimal_two_level"])
        assert code == 0
        assert by_name["digest"] == by_path["digest"]

    def test_unknown_config_name_lists_shipped(self, capsys):
        assert run_main(["report", "--config", "no_such_system", "--no-save"]) == 1
        err = capsys.readouterr().err
        assert "no_such_system" in err
        assert "optimal_two_level" in err

    def test_error_messages_name_the_field(self, write_config, capsys):
        bad = write_config("H: [[0, 1], [1, 0]]\nD: [[0, 0], [0, 1]]\npsi: [1, x]\n")
        run_main(["report", "--config", str(bad), "--no-save"])
        err = capsys.readouterr().err
        assert "psi[1]" in err
        assert "line 3" in err

    def test_invalid_jobs(self, configs_dir):
        assert run_main(["report", "--config", str(configs_dir / "optimal_two_level.yaml"), "--jobs", "0", "--no-save"]) == 1


class TestOutputs:
    """Outputs SHOULD be saved per command and SHOULD honor the requested format."""

    def test_saved_under_outputs_dir(self, configs_dir, outputs_dir, capsys):
        code = run_main(["report", "--config", str(configs_dir / "optimal_two_level.yaml"), "--outputs-dir", str(outputs_dir)])
        assert code == 0
        printed = json.loads(capsys.readouterr().out)
        saved = list((outputs_dir / "report").glob("*.json"))
        assert len(saved) == 1
        assert saved[0].name == f"{printed['digest'][:12]}_1.json"
        assert json.loads(saved[0].read_text())["digest"] == printed["digest"]

    def test_resolved_config_reproduces_digest(self, configs_dir, outputs_dir, capsys):
        code = run_main(["report", "--config", str(configs_dir / "optimal_two_level.yaml"), "--outputs-dir", str(outputs_dir)])
        assert code == 0
        printed = json.loads(capsys.readouterr().out)
        saved = outputs_dir / "report" / f"{printed['digest'][:12]}_1.config.yaml"
        assert printed["config_saved_to"].endswith(saved.name)
        assert config_digest(*load_config(saved).build()) == printed["digest"]

    def test_environment_sets_format(self, configs_dir, monkeypatch, capsys):
        monkeypatch.setenv("ARRIVAL_FORMAT", "csv")
        code = run_main(["report", "--config", str(configs_dir / "optimal_two_level.yaml"), "--no-save"])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("# command=report")
        assert lines[1] == "quantity,value"

    def test_density_csv(self, configs_dir, tmp_path, capsys):
        target = tmp_path / "density.csv"
        code = run_main(
            [
                "density",
                "--config", str(configs_dir / "optimal_two_level.yaml"),
                "--t-max", "1.0",
                "--step", "0.5",
                "--format", "csv",
                "--out", str(target),
            ]
        )
        assert code == 0
        lines = target.read_text().splitlines()
        assert lines[0].startswith("# command=density")
        assert lines[1] == "t [hbar/E],P [E/hbar],S [1]"
        rows = [[float(x) for x in line.split(",")] for line in lines[2:]]
        assert [r[0] for r in rows] == [0.0, 0.5, 1.0]
        assert rows[0][1] == pytest.approx(0.0, abs=1e-15)
        assert rows[0][2] == pytest.approx(1.0)
        assert capsys.readouterr().out == target.read_text()

    def test_density_default_horizon(self, configs_dir, capsys):
        code, record = run_json(capsys, ["density", "--config", str(configs_dir / "optimal_two_level.yaml"), "--step", "0.1"])
        assert code == 0
        outputs = record["outputs"]
        assert outputs["p"] == pytest.approx(1.0)
        assert outputs["rows"] == len(record["rows"])
        assert record["units"] == {"t": "hbar/E", "P": "E/hbar", "S": "1"}
        assert record["rows"][-1]["S"] < 1e-10
        assert outputs["unimodal"] is True
        assert 0.0 < outputs["secondary_peak_ratio"] < 1e-2
        assert outputs["peak_time"] == pytest.approx(1.1, abs=0.06)

    def test_density_rejects_bad_grid(self, configs_dir):
        config = str(configs_dir / "optimal_two_level.yaml")
        assert run_main(["density", "--config", config, "--step", "0", "--no-save"]) == 1
        assert run_main(["density", "--config", config, "--t-min", "-1", "--no-save"]) == 1


class TestSweepCommand:
    def test_locates_optimal_damping(self, configs_dir, capsys):
        code, record = run_json(
            capsys,
            ["sweep", "--config", str(configs_dir / "optimal_two_level.yaml"), "--start", "1.0", "--stop", "1.9", "--points", "10"],
        )
        assert code == 0
        outputs = record["outputs"]
        assert outputs["parameter"] == "gamma/omega"
        assert outputs["minimizer"] == pytest.approx(2.0**0.5, abs=1e-5)
        assert outputs["min_mean_product"] == pytest.approx(2.0**0.5, abs=1e-9)
        assert outputs["var_product_at_minimizer"] == pytest.approx(2.0**-0.5, abs=1e-6)
        assert len(record["rows"]) == 10

    def test_locates_both_minima_separately(self, configs_dir, capsys):
        _, record = run_json(
            capsys,
            ["sweep", "--config", str(configs_dir / "optimal_two_level.yaml"), "--start", "0.2", "--stop", "1.9", "--points", "18"],
        )
        outputs = record["outputs"]
        assert outputs["minimizer"] == pytest.approx(2.0**0.5, rel=1e-4)
        assert outputs["var_minimizer"] == pytest.approx(2.0**0.5, rel=1e-4)
        assert outputs["min_var_product"] == pytest.approx(2.0**-0.5, abs=1e-8)

    def test_crosses_exceptional_point(self, configs_dir, capsys):
        code, record = run_json(
            capsys,
            ["sweep", "--config", str(configs_dir / "optimal_two_level.yaml"), "--start", "1.0", "--stop", "3.0", "--points", "5"],
        )
        assert code == 0
        rows = {round(row["gamma/omega"], 6): row for row in record["rows"]}
        # gamma = 2 omega is the exceptional point
        assert rows[2.0]["mean_T*std_E"] == pytest.approx(1.5, rel=1e-9)
        assert rows[2.0]["std_T*std_E"] == pytest.approx(3.0**0.5 / 2.0, rel=1e-9)

    def test_too_few_points_report_no_minimizer(self, configs_dir, capsys):
        code, record = run_json(
            capsys,
            ["sweep", "--config", str(configs_dir / "optimal_two_level.yaml"), "--start", "1.0", "--stop", "2.0", "--points", "2"],
        )
        assert code == 0
        assert record["outputs"]["minimizer"] is None

    def test_needs_model_block(self, configs_dir):
        argv = ["sweep", "--config", str(configs_dir / "two_level_explicit.yaml"), "--start", "1", "--stop", "2", "--no-save"]
        assert run_main(argv) == 1


class TestMonteCarloCommand:
    def test_small_run(self, configs_dir, capsys):
        code, record = run_json(
            capsys, ["montecarlo", "--config", str(configs_dir / "optimal_two_level.yaml"), "--n", "2000", "--seed", "4"]
        )
        ks = record["outputs"]["ks"]
        assert code == (1 if ks["verdict"] == "fail" else 0)
        assert record["seeds"] == [4]
        assert record["outputs"]["clicks"] + record["outputs"]["no_click_count"] == 2000
        assert len(record["rows"]) == record["outputs"]["clicks"]

    def test_short_horizon_exits_one(self, configs_dir, capsys):
        argv = ["montecarlo", "--config", str(configs_dir / "optimal_two_level.yaml"), "--n", "500", "--t-max", "1"]
        assert run_main([*argv, "--no-save"]) == 1
        assert "--t-max" in capsys.readouterr().err

    def test_minimum_sample_size(self, configs_dir):
        argv = ["montecarlo", "--config", str(configs_dir / "optimal_two_level.yaml"), "--n", "10", "--no-save"]
        assert run_main(argv) == 1


class TestVerifyCommand:
    def test_small_battery_passes(self, capsys):
        code, record = run_json(capsys, ["verify", "--count", "3", "--dims", "2-3", "--gap-instances", "8", "--no-fits"])
        assert code == 0
        assert record["outputs"]["passed"] is True
        assert record["outputs"]["systems"] == 3

    def test_negated_relations_fail(self, capsys):
        argv = ["verify", "--count", "2", "--dims", "2", "--gap-instances", "0", "--no-fits", "--relation-sign", "-1"]
        code, record = run_json(capsys, argv)
        assert code == 1
        assert record["outputs"]["system_failures"] == 2


class TestGroundStateCommand:
    def test_wall_problem(self, capsys):
        code, record = run_json(capsys, ["groundstate", "--problem", "wall", "--k", "1"])
        assert code == 0
        assert record["outputs"]["max_error"] < 1e-5
        assert record["outputs"]["wall"]["eigenvector_matches"] is True
        assert record["rows"][0]["problem"] == "wall"

    def test_both_problems_extrapolated(self, capsys):
        code, record = run_json(capsys, ["groundstate", "--extrapolate"])
        assert code == 0
        assert record["outputs"]["max_error"] < 1e-5
        assert [r["problem"] for r in record["rows"]] == ["oscillator", "oscillator", "wall", "wall"]

    def test_digest_ignores_output_flags(self, capsys, tmp_path):
        _, a = run_json(capsys, ["groundstate", "--problem", "oscillator", "--k", "1"])
        _, b = run_json(capsys, ["groundstate", "--problem", "oscillator", "--k", "1", "--outputs-dir", str(tmp_path)])
        assert a["digest"] == b["digest"]

    def test_coarse_grid_exits_one(self):
        assert run_main(["groundstate", "--problem", "oscillator", "--oscillator-points", "50", "--no-save"]) == 1


@pytest.mark.theorem
class TestFitCommand:
    def test_baseline_round_trip(self, configs_dir, tmp_path, capsys):
        baseline = tmp_path / "baseline.json"
        argv = ["fit", "--config", str(configs_dir / "optimal_two_level.yaml"), "--kind", "gaussian", "--baseline", str(baseline)]
        code, first = run_json(capsys, argv)
        assert code == 0
        assert first["outputs"]["baseline"]["stored"] is True
        assert first["outputs"]["fits"]["gaussian"]["satisfied"] is True
        assert first["outputs"]["constants"]["C"] == pytest.approx(1.37608, abs=1e-5)
        stored = json.loads(baseline.read_text())
        assert stored[first["digest"]]["gaussian"] == first["outputs"]["fits"]["gaussian"]["distance"]

        code, second = run_json(capsys, argv)
        assert code == 0
        assert second["outputs"]["baseline"]["stored"] is False
        assert second["outputs"]["baseline"]["within_tolerance"] is True

    def test_drifted_baseline_fails(self, configs_dir, tmp_path, capsys):
        baseline = tmp_path / "baseline.json"
        argv = ["fit", "--config", str(configs_dir / "optimal_two_level.yaml"), "--kind", "gaussian", "--baseline", str(baseline)]
        _, first = run_json(capsys, argv)
        baseline.write_text(json.dumps({first["digest"]: {"gaussian": 0.5}}))
        code, second = run_json(capsys, argv)
        assert code == 1
        assert second["outputs"]["baseline"]["within_tolerance"] is False
