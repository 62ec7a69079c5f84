# conftest.py - Centralized Test Configuration
"""
Shared pytest configuration and fixtures for the arrival-uncertainty test suite.

This file provides:
- Reference systems (optimal two-level system, constant absorber, random systems)
- Temporary configuration files and output directories
- Marker registration and nodeid-based auto-marking
"""

import logging
import os
import sys
from pathlib import Path
from typing import Callable, Iterator, Tuple

import numpy as np
import pytest

# Ensure the package is importable in a src/ layout
_TESTS_DIR = Path(__file__).resolve().parent
_ROOT = _TESTS_DIR.parent
_SRC = _ROOT / "src"
if str(_SRC) not in sys.path:
    sys.path.insert(0, str(_SRC))

from arrival_uncertainty.core.absorption import AbsorptiveSystem
from arrival_uncertainty.core.linops import StateVector
from arrival_uncertainty.models.constant import ConstantAbsorberModel
from arrival_uncertainty.models.random_system import random_system
from arrival_uncertainty.models.two_level import two_level
from arrival_uncertainty.utils import logger as logger_module

__all__ = [
    "optimal_system",
    "constant_system",
    "random_systems",
    "configs_dir",
    "write_config",
    "outputs_dir",
]

SQRT2 = float(np.sqrt(2.0))


# ===============================================================================
# SHARED FIXTURES
# ===============================================================================

@pytest.fixture
def optimal_system() -> Tuple[AbsorptiveSystem, StateVector]:
    """Two-level system at the optimum: omega = 2, gamma = 2 sqrt(2), hbar = 1."""
    return two_level(2.0, 2.0 * SQRT2)


@pytest.fixture
def constant_system() -> Tuple[AbsorptiveSystem, StateVector]:
    """Constant absorber alpha = 0.5 on sigma_x; S(t) = exp(-t)."""
    return ConstantAbsorberModel().build()


@pytest.fixture
def random_systems() -> Callable[[int, int], Iterator[Tuple[AbsorptiveSystem, StateVector]]]:
    """Factory yielding ``count`` seeded random systems cycling through dims 2..max_dim."""

    def make(count: int, max_dim: int = 6) -> Iterator[Tuple[AbsorptiveSystem, StateVector]]:
        for i in range(count):
            dim = 2 + i % (max_dim - 1)
            kernel_dim = 1 + i % (dim - 1)
            yield random_system(dim, kernel_dim, seed=1000 + i)

    return make


@pytest.fixture
def configs_dir() -> Path:
    """Reference configurations shipped under data/configs."""
    return _ROOT / "data" / "configs"


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[str, str], Path]:
    """Write a configuration document into a temporary file and return its path."""

    def write(text: str, name: str = "system.yaml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def outputs_dir(tmp_path: Path) -> Path:
    path = tmp_path / "outputs"
    path.mkdir()
    return path


# ===============================================================================
# TEST CONFIGURATION
# ===============================================================================

def pytest_collection_modifyitems(config, items):  # type: ignore[override]
    """Auto-apply markers based on nodeid conventions to reduce boilerplate."""
    for item in items:
        if "test_cli" in item.nodeid:
            item.add_marker(pytest.mark.cli)
        elif "test_integration" in item.nodeid:
            item.add_marker(pytest.mark.integration)
        elif "test_sampling" in item.nodeid:
            item.add_marker(pytest.mark.montecarlo)
        else:
            item.add_marker(pytest.mark.unit)


# ===============================================================================
# ENVIRONMENT SETUP
# ===============================================================================

@pytest.fixture(autouse=True)
def setup_test_environment(monkeypatch, tmp_path) -> None:
    """Keep ARRIVAL_* overrides from the developer's shell out of the tests."""
    for var in list(os.environ):
        if var.startswith("ARRIVAL_"):
            monkeypatch.delenv(var, raising=False)
    monkeypatch.setenv("ARRIVAL_OUTPUTS_DIR", str(tmp_path / "default-outputs"))


@pytest.fixture(autouse=True)
def quiet_logging() -> Iterator[None]:
    """Drop the CLI handler after each test; it is bound to that test's captured stderr."""
    yield
    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(logging.WARNING)
    logger_module._CONFIGURED = False
    logger_module.clear_run()
    logging.captureWarnings(False)
