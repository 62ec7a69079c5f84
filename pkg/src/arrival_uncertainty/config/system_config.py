# config/system_config.py
"""System configuration documents (YAML, hence also JSON) and their digests.

Two shapes are accepted::

    hbar: 1.0                      # optional, default from settings
    model: two_level               # named model block
    parameters: {omega: 2.0, gamma: 2.8284271}

    hbar: 1.0                      # explicit matrices, complex entries as [re, im]
    H: [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]
    D: [[[0, 0], [0, 0]], [[0, 0], [1.4142135623730951, 0]]]
    psi: [[1, 0], [0, 0]]

Every failure is a :class:`ConfigError` naming the field path (``D[1][0]``)
and, when known, the line in the document.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from arrival_uncertainty.core.absorption import AbsorptiveSystem, make_system
from arrival_uncertainty.core.dispatcher import get_model, resolve_model_name
from arrival_uncertainty.core.errors import ConfigError
from arrival_uncertainty.core.linops import StateVector
from arrival_uncertainty.models.base import SystemModel

__all__ = [
    "SystemConfig",
    "load_config",
    "parse_config",
    "system_to_config",
    "dump_config",
    "config_digest",
]

_RESERVED = {"hbar", "model", "parameters", "H", "D", "psi", "name", "description"}
# Model parameters holding complex arrays rather than scalars.
_COMPLEX_PARAMETERS = {"H": "matrix", "psi": "vector"}

PathKey = str


@dataclass
class SystemConfig:
    hbar: Optional[float] = None
    model: Optional[str] = None
    parameters: Dict[str, Any] = field(default_factory=dict)
    H: Optional[np.ndarray] = None
    D: Optional[np.ndarray] = None
    psi: Optional[np.ndarray] = None
    name: Optional[str] = None
    source: Optional[Path] = None

    @property
    def is_model(self) -> bool:
        return self.model is not None

    def model_instance(self) -> SystemModel:
        if self.model is None:
            raise ConfigError("configuration has explicit matrices, not a named model", field="model")
        return get_model(self.model, **self.parameters)

    def build(self, hbar: Optional[float] = None) -> Tuple[AbsorptiveSystem, StateVector]:
        """Construct the system and state; ``hbar`` from the document wins over the argument."""
        unit = self.hbar if self.hbar is not None else (hbar if hbar is not None else 1.0)
        if self.is_model:
            return self.model_instance().build(unit)
        assert self.H is not None and self.D is not None and self.psi is not None
        system = make_system(self.H, self.D, unit)
        norm = float(np.linalg.norm(self.psi))
        if abs(norm - 1.0) > 1e-12:
            raise ConfigError(f"psi must have unit norm, got {norm:.15f}", field="psi")
        return system, StateVector(self.psi)


def _line_index(text: str) -> Dict[PathKey, int]:
    """Map field paths (``D[1][0]``, ``parameters.omega``) to 1-based document lines."""
    lines: Dict[PathKey, int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node: Any, path: str) -> None:
        lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                child = f"{path}.{key.value}" if path else str(key.value)
                walk(value, child)
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                walk(item, f"{path}[{i}]")

    if root is not None:
        walk(root, "")
    return lines


class _Parser:
    def __init__(self, text: str) -> None:
        self.lines = _line_index(text)

    def fail(self, message: str, path: str) -> ConfigError:
        return ConfigError(message, field=path, line=self.lines.get(path))

    def real(self, value: Any, path: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(f"expected a number, got {value!r}", path)
        if not np.isfinite(value):
            raise self.fail(f"expected a finite number, got {value!r}", path)
        return float(value)

    def complex_entry(self, value: Any, path: str) -> complex:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise self.fail(f"complex entries are [re, im] pairs, got {len(value)} items", path)
            return complex(self.real(value[0], f"{path}[0]"), self.real(value[1], f"{path}[1]"))
        return complex(self.real(value, path), 0.0)

    def vector(self, value: Any, path: str) -> np.ndarray:
        if not isinstance(value, list) or not value:
            raise self.fail("expected a non-empty list of [re, im] pairs", path)
        return np.array([self.complex_entry(v, f"{path}[{i}]") for i, v in enumerate(value)], dtype=np.complex128)

    def matrix(self, value: Any, path: str) -> np.ndarray:
        if not isinstance(value, list) or not value:
            raise self.fail("expected a non-empty list of rows", path)
        rows: List[np.ndarray] = []
        for i, row in enumerate(value):
            if not isinstance(row, list):
                raise self.fail("each row must be a list of [re, im] pairs", f"{path}[{i}]")
            rows.append(np.array([self.complex_entry(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)]))
        if any(r.size != len(rows) for r in rows):
            raise self.fail(f"matrix must be square; got {len(rows)} rows of lengths {[r.size for r in rows]}", path)
        return np.vstack(rows).astype(np.complex128)


def parse_config(text: str, source: Optional[Path] = None) -> SystemConfig:
    """Parse a configuration document held in ``text``."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigError(f"invalid YAML: {problem}", line=line) from e
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")

    parser = _Parser(text)
    config = SystemConfig(source=source, name=str(data["name"]) if data.get("name") else None)
    if data.get("hbar") is not None:
        config.hbar = parser.real(data["hbar"], "hbar")
        if config.hbar <= 0:
            raise parser.fail(f"hbar must be > 0, got {config.hbar}", "hbar")

    if "model" in data:
        if not isinstance(data["model"], str):
            raise parser.fail("model must be a string", "model")
        config.model = resolve_model_name(data["model"])
        params = data.get("parameters") or {}
        if not isinstance(params, dict):
            raise parser.fail("parameters must be a mapping", "parameters")
        extras = {k: v for k, v in data.items() if k not in _RESERVED}
        for key, value in {**extras, **params}.items():
            path = f"parameters.{key}" if key in params else str(key)
            kind = _COMPLEX_PARAMETERS.get(key)
            if kind == "matrix":
                config.parameters[key] = parser.matrix(value, path)
            elif kind == "vector":
                config.parameters[key] = parser.vector(value, path)
            elif isinstance(value, int) and not isinstance(value, bool):
                config.parameters[key] = value
            else:
                config.parameters[key] = parser.real(value, path)
        config.model_instance()  # surfaces unknown parameter names now
        return config

    missing = [k for k in ("H", "D", "psi") if k not in data]
    if missing:
        raise ConfigError(f"explicit configuration needs H, D and psi; missing {', '.join(missing)}", field=missing[0])
    config.H = parser.matrix(data["H"], "H")
    config.D = parser.matrix(data["D"], "D")
    config.psi = parser.vector(data["psi"], "psi")
    if config.D.shape != config.H.shape:
        raise parser.fail(f"D has shape {config.D.shape} but H has shape {config.H.shape}", "D")
    if config.psi.size != config.H.shape[0]:
        raise parser.fail(f"psi has {config.psi.size} entries but H is {config.H.shape[0]}x{config.H.shape[0]}", "psi")
    return config


def load_config(path: Union[str, Path]) -> SystemConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Expected configuration file at {path} but none was found")
    return parse_config(path.read_text(encoding="utf-8"), source=path)


def _pairs(values: np.ndarray) -> Any:
    if values.ndim == 1:
        return [[float(v.real), float(v.imag)] for v in values]
    return [_pairs(row) for row in values]


def system_to_config(system: AbsorptiveSystem, psi: StateVector) -> Dict[str, Any]:
    """Explicit-matrix document that re-parses to the same system (same digest)."""
    return {
        "hbar": float(system.hbar),
        "H": _pairs(np.asarray(system.H)),
        "D": _pairs(np.asarray(system.D)),
        "psi": _pairs(np.asarray(psi.amplitudes)),
    }


def dump_config(system: AbsorptiveSystem, psi: StateVector) -> str:
    return yaml.safe_dump(system_to_config(system, psi), sort_keys=False, default_flow_style=None)


def config_digest(system: AbsorptiveSystem, psi: StateVector) -> str:
    """SHA-256 over an exact (``float.hex``) encoding of hbar, H, D and psi."""
    h = hashlib.sha256()
    h.update(f"dim={system.dim};hbar={float(system.hbar).hex()}".encode())
    for label, values in (("H", system.H), ("D", system.D), ("psi", psi.amplitudes)):
        flat = np.asarray(values, dtype=np.complex128).reshape(-1)
        h.update(f";{label}=".encode())
        h.update(",".join(f"{float(v.real).hex()}:{float(v.imag).hex()}" for v in flat).encode())
    return h.hexdigest()
