"""
Outcome-focused tests for the model registry.

These tests validate observable behavior of get_model without coupling to
internal import patterns or attribute names.
"""

import pytest

from arrival_uncertainty.core.dispatcher import get_model, list_available_models, resolve_model_name
from arrival_uncertainty.core.errors import ConfigError
from arrival_uncertainty.models.base import SystemModel


@pytest.mark.unit
class TestRegistryBasics:
    def test_supported_models_construct(self):
        for name in list_available_models():
            model = get_model(name)
            assert isinstance(model, SystemModel)
            assert model.name == name

    def test_invalid_model_names(self):
        for invalid in ["invalid", "harmonic", ""]:
            with pytest.raises(ConfigError):
                get_model(invalid)
        for invalid in [123, None]:
            with pytest.raises(TypeError):
                get_model(invalid)  # type: ignore[arg-type]

    def test_case_insensitive_and_aliases(self):
        assert resolve_model_name("Two_Level") == "two_level"
        assert resolve_model_name(" qubit ") == "two_level"
        assert resolve_model_name("TRAPPED_ION") == "ion"
        assert resolve_model_name("gue") == "random"

    def test_fresh_instances(self):
        a = get_model("two_level")
        b = get_model("two_level")
        assert a == b
        assert a is not b


@pytest.mark.unit
class TestRegistryParameters:
    def test_parameters_are_applied(self):
        model = get_model("two_level", omega=1.0, gamma=3.0)
        assert (model.omega, model.gamma) == (1.0, 3.0)

    def test_unknown_parameter_names_field(self):
        with pytest.raises(ConfigError) as exc:
            get_model("ion", omega34=1.0)
        assert exc.value.field == "parameters.omega34"

    def test_built_system_matches_model(self):
        system, psi = get_model("constant", alpha=2.0).build()
        assert system.D[0, 0].real == pytest.approx(2.0)
        assert psi.dim == 2
