"""
Test configuration and utility function requirements.

These tests define how settings, logging and seeded randomness SHOULD behave,
independent of current implementation details.
"""
import json
import logging

import numpy as np
import pytest

from arrival_uncertainty.config.settings import Settings, load_settings
from arrival_uncertainty.utils import logger as logger_module
from arrival_uncertainty.utils.logger import bind_run, clear_run, configure_logging, current_run, get_logger
from arrival_uncertainty.utils.rng import make_rng

pytestmark = pytest.mark.contract


class TestConfigurationContract:
    """Test settings resolution: defaults < environment < flags."""

    def test_defaults(self):
        settings = load_settings()
        assert settings.hbar == 1.0
        assert settings.tol == 1e-10
        assert settings.jobs == 1
        assert settings.output_format == "json"

    def test_environment_variable_support(self, monkeypatch):
        """Configuration SHOULD pick up ARRIVAL_* variables."""
        monkeypatch.setenv("ARRIVAL_HBAR", "2.5")
        monkeypatch.setenv("ARRIVAL_SEED", "17")
        monkeypatch.setenv("ARRIVAL_FORMAT", "CSV")
        monkeypatch.setenv("ARRIVAL_JOBS", "4")
        settings = load_settings()
        assert (settings.hbar, settings.seed, settings.output_format, settings.jobs) == (2.5, 17, "csv", 4)

    def test_blank_variables_fall_back_to_defaults(self, monkeypatch):
        monkeypatch.setenv("ARRIVAL_TOL", "  ")
        assert load_settings().tol == 1e-10

    def test_configuration_validation(self, monkeypatch):
        """Malformed environment values MUST fail with the variable name."""
        monkeypatch.setenv("ARRIVAL_JOBS", "many")
        with pytest.raises(ValueError, match="ARRIVAL_JOBS"):
            load_settings()
        monkeypatch.delenv("ARRIVAL_JOBS")
        monkeypatch.setenv("ARRIVAL_FORMAT", "xml")
        with pytest.raises(ValueError, match="ARRIVAL_FORMAT"):
            load_settings()

    def test_flags_override_only_when_given(self):
        settings = Settings(hbar=2.0, seed=5).override(hbar=None, seed=9, jobs=None)
        assert (settings.hbar, settings.seed, settings.jobs) == (2.0, 9, 1)


class TestLoggerContract:
    """Test logging requirements."""

    def test_get_logger_installs_no_handlers(self):
        log = get_logger("arrival_uncertainty.test")
        assert isinstance(log, logging.Logger)
        assert log.handlers == []

    def test_logger_configuration(self, capsys):
        configure_logging(logging.INFO)
        get_logger("arrival_uncertainty.test").info("p=%.3f", 0.5)
        captured = capsys.readouterr()
        assert "p=0.500" in captured.err
        assert captured.out == ""

    def test_configure_is_idempotent(self):
        configure_logging(logging.INFO)
        configure_logging(logging.DEBUG)
        root = logging.getLogger()
        assert len(root.handlers) == 1
        assert root.level == logging.DEBUG

    def test_json_format_merges_fields(self, monkeypatch, capsys):
        monkeypatch.setenv("LOG_FORMAT", "json")
        logger_module._CONFIGURED = False
        configure_logging(logging.INFO, force=True)
        get_logger("arrival_uncertainty.test").error("relation failed", extra={"fields": {"ratio_var": 0.9}})
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record["level"] == "ERROR"
        assert record["message"] == "relation failed"
        assert record["ratio_var"] == 0.9

    def test_level_from_environment(self, monkeypatch):
        monkeypatch.setenv("LOG_LEVEL", "warning")
        configure_logging(force=True)
        assert logging.getLogger().level == logging.WARNING

    def test_numeric_level_from_environment(self, monkeypatch):
        monkeypatch.setenv("LOG_LEVEL", "15")
        configure_logging(force=True)
        assert logging.getLogger().level == 15

    def test_unknown_level_falls_back_with_warning(self, monkeypatch, capsys):
        monkeypatch.setenv("LOG_LEVEL", "chatty")
        configure_logging(force=True)
        assert logging.getLogger().level == logging.INFO
        assert "LOG_LEVEL='chatty'" in capsys.readouterr().err

    def test_bound_run_tags_plain_lines(self, capsys):
        configure_logging(logging.INFO, force=True)
        bind_run("report", "0123456789abcdef0123")
        try:
            get_logger("arrival_uncertainty.test").info("p=%.3f", 0.5)
        finally:
            clear_run()
        get_logger("arrival_uncertainty.test").info("unbound")
        lines = capsys.readouterr().err.strip().splitlines()
        assert "[report 0123456789ab]" in lines[-2]
        assert "[report" not in lines[-1]

    def test_bound_run_in_json_records(self, monkeypatch, capsys):
        monkeypatch.setenv("LOG_FORMAT", "json")
        configure_logging(logging.INFO, force=True)
        bind_run("fit", "feedfacefeedface")
        try:
            get_logger("arrival_uncertainty.test").info("fitting")
        finally:
            clear_run()
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert (record["command"], record["digest"]) == ("fit", "feedfacefeed")
        assert current_run() is None


class TestSeededStreams:
    """Random streams MUST be reproducible and independent per stream index."""

    def test_same_key_same_stream(self):
        np.testing.assert_array_equal(make_rng(1, 2).random(5), make_rng(1, 2).random(5))

    def test_streams_differ(self):
        assert not np.array_equal(make_rng(1, 0).random(5), make_rng(1, 1).random(5))
        assert not np.array_equal(make_rng(1, 0).random(5), make_rng(2, 0).random(5))

    def test_negative_seeds_are_accepted(self):
        assert make_rng(-1).random() == make_rng(-1).random()

    def test_negative_stream_rejected(self):
        with pytest.raises(ValueError):
            make_rng(0, -1)
