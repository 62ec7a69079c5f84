"""Model registry with lazy imports and alias support.

Design goals:
  * Resolve the model names used in configuration blocks, sweeps and the CLI.
  * Support convenient aliases (e.g. "qubit" -> "two_level").
  * Return a fresh, validated instance each call (no hidden singletons).

Public surface:
  * get_model(name, **parameters) -> SystemModel instance
  * resolve_model_name(name) -> canonical key
  * list_available_models() -> list[str] of canonical model keys
"""

from __future__ import annotations

from typing import Any, Callable, Dict, List, Type

from arrival_uncertainty.core.errors import ConfigError
from arrival_uncertainty.models.base import SystemModel

# Canonical model keys recognised by the project.
_CANONICAL: List[str] = ["two_level", "constant", "ion", "random"]

# Aliases map (lowercase) -> canonical key.
_ALIASES: Dict[str, str] = {
    "two-level": "two_level",
    "twolevel": "two_level",
    "qubit": "two_level",
    "constant_absorber": "constant",
    "exponential": "constant",
    "ion_scheme": "ion",
    "trapped_ion": "ion",
    "gue": "random",
    "random_system": "random",
}


def _lazy(module: str, cls: str) -> Callable[[], Type[SystemModel]]:
    def load() -> Type[SystemModel]:
        return getattr(__import__(module, fromlist=[cls]), cls)

    return load


# Factory registry of zero-arg callables returning each model class.
_REGISTRY: Dict[str, Callable[[], Type[SystemModel]]] = {
    "two_level": _lazy("arrival_uncertainty.models.two_level", "TwoLevelModel"),
    "constant": _lazy("arrival_uncertainty.models.constant", "ConstantAbsorberModel"),
    "ion": _lazy("arrival_uncertainty.models.ion", "IonModel"),
    "random": _lazy("arrival_uncertainty.models.random_system", "RandomModel"),
}


def _normalise(name: str) -> str:
    return name.strip().lower()


def list_available_models() -> List[str]:
    """Return the list of canonical model identifiers."""
    return list(_CANONICAL)


def resolve_model_name(model_name: str) -> str:
    """Map a name or alias (case-insensitive) to its canonical key.

    Raises
    ------
    TypeError
        If model_name is not a string.
    ConfigError
        If the name/alias is unknown.
    """
    if not isinstance(model_name, str):
        raise TypeError("model_name must be a string")
    name = _normalise(model_name)
    canonical = _ALIASES.get(name, name)
    if canonical not in _REGISTRY:
        raise ConfigError(f"Unknown model: '{model_name}'. Supported: {', '.join(_CANONICAL)}.", field="model")
    return canonical


def get_model(model_name: str, **parameters: Any) -> SystemModel:
    """Instantiate a model by name or alias with the given parameters.

    Unknown parameter names raise :class:`ConfigError` naming the offending field.
    """
    canonical = resolve_model_name(model_name)
    cls = _REGISTRY[canonical]()
    try:
        return cls().with_parameters(**parameters)
    except TypeError as e:
        bad = next((k for k in parameters if k not in cls.__dataclass_fields__), None)
        raise ConfigError(str(e), field=f"parameters.{bad}" if bad else "parameters") from e
