# config/settings.py
"""Runtime settings resolved from defaults, ``.env`` and ``ARRIVAL_*`` variables.

CLI flags override the environment; the environment overrides the defaults below.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Optional, TypeVar

from dotenv import load_dotenv

load_dotenv()

ENV_PREFIX = "ARRIVAL_"

DEFAULTS: Dict[str, object] = {
    "hbar": 1.0,
    "seed": 20240601,
    # Relative tolerance of the standing assumption ||D psi|| <= tol * ||D||.
    "tol": 1e-10,
    "condition_cap": 1e8,
    "horizon_cap": 1e6,
    "jobs": 1,
    "output_format": "json",
    "outputs_dir": "outputs",
}

T = TypeVar("T")


def _env(name: str, cast: Callable[[str], T], default: T) -> T:
    raw = os.getenv(ENV_PREFIX + name.upper())
    if raw is None or not raw.strip():
        return default
    try:
        return cast(raw.strip())
    except ValueError as e:
        raise ValueError(f"Environment variable {ENV_PREFIX}{name.upper()}={raw!r} is not valid: {e}") from e


def _output_format(value: str) -> str:
    fmt = value.lower()
    if fmt not in ("json", "csv"):
        raise ValueError("expected 'json' or 'csv'")
    return fmt


@dataclass(frozen=True)
class Settings:
    hbar: float = 1.0
    seed: int = 20240601
    tol: float = 1e-10
    condition_cap: float = 1e8
    horizon_cap: float = 1e6
    jobs: int = 1
    output_format: str = "json"
    outputs_dir: Path = Path("outputs")

    def override(self, **values: Optional[object]) -> "Settings":
        """Return a copy with every non-None value applied (CLI flags)."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})


def load_settings() -> Settings:
    """Read the ``ARRIVAL_*`` environment on top of the defaults."""
    return Settings(
        hbar=_env("hbar", float, float(DEFAULTS["hbar"])),  # type: ignore[arg-type]
        seed=_env("seed", int, int(DEFAULTS["seed"])),  # type: ignore[arg-type]
        tol=_env("tol", float, float(DEFAULTS["tol"])),  # type: ignore[arg-type]
        condition_cap=_env("condition_cap", float, float(DEFAULTS["condition_cap"])),  # type: ignore[arg-type]
        horizon_cap=_env("horizon_cap", float, float(DEFAULTS["horizon_cap"])),  # type: ignore[arg-type]
        jobs=_env("jobs", int, int(DEFAULTS["jobs"])),  # type: ignore[arg-type]
        output_format=_env("format", _output_format, str(DEFAULTS["output_format"])),
        outputs_dir=_env("outputs_dir", Path, Path(str(DEFAULTS["outputs_dir"]))),
    )
