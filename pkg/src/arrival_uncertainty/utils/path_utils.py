"""Filesystem and path discovery helpers.

Output files are organised per command and named after the configuration
digest, with a run counter so repeated runs never overwrite each other:
``outputs/<command>/<digest-prefix>_<N>.<ext>``.

``--config`` accepts either a file path or the bare name of one of the
reference systems under ``data/configs`` (``--config ion``).
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional

__all__ = [
    "find_project_root",
    "shipped_configs_dir",
    "ensure_dir",
    "list_configs",
    "resolve_config_path",
    "get_output_path",
]

DIGEST_PREFIX = 12
CONFIG_SUFFIXES = (".yaml", ".yml", ".json")


def find_project_root(start_path: Optional[Path] = None) -> Path:
    """Nearest directory at or above ``start_path`` holding ``pyproject.toml``.

    ``start_path`` defaults to this module and may be a file.
    """
    start = (start_path or Path(__file__)).resolve()
    if not start.is_dir():
        start = start.parent
    for candidate in (start, *start.parents):
        if (candidate / "pyproject.toml").is_file():
            return candidate
    raise FileNotFoundError(f"no pyproject.toml at or above {start}")


def shipped_configs_dir() -> Optional[Path]:
    """``data/configs`` of a source checkout, or None for an installed wheel."""
    try:
        folder = find_project_root() / "data" / "configs"
    except FileNotFoundError:
        return None
    return folder if folder.is_dir() else None


def ensure_dir(path: Path) -> None:
    """Create directory (and parents) if missing (idempotent)."""
    path.mkdir(parents=True, exist_ok=True)


def list_configs(configs_dir: Optional[Path]) -> List[str]:
    """Sorted stems of the configuration files in ``configs_dir``."""
    if configs_dir is None or not configs_dir.is_dir():
        return []
    return sorted({f.stem for f in configs_dir.iterdir() if f.is_file() and f.suffix in CONFIG_SUFFIXES})


def resolve_config_path(value: Path, configs_dir: Optional[Path] = None) -> Path:
    """Return ``value`` if it is a file, else the shipped config of that name.

    Raises
    ------
    FileNotFoundError
        Neither exists; the message lists the shipped names.
    """
    if value.is_file():
        return value
    folder = configs_dir if configs_dir is not None else shipped_configs_dir()
    if folder is not None and value.parent == Path(".") and value.suffix not in CONFIG_SUFFIXES:
        for suffix in CONFIG_SUFFIXES:
            candidate = folder / f"{value.name}{suffix}"
            if candidate.is_file():
                return candidate
    known = ", ".join(list_configs(folder)) or "none found"
    raise FileNotFoundError(f"no configuration file {value} (shipped configurations: {known})")


def _get_next_run_number(base_path: Path) -> int:
    """Next free N for ``<stem>_N<ext>`` files next to ``base_path``."""
    if not base_path.parent.exists():
        return 1
    stem, extension = base_path.stem, base_path.suffix
    existing: List[int] = []
    for candidate in base_path.parent.iterdir():
        if not candidate.is_file() or candidate.suffix != extension:
            continue
        name = candidate.stem
        if name == stem:
            existing.append(1)
        elif name.startswith(stem + "_") and name[len(stem) + 1 :].isdigit():
            existing.append(int(name[len(stem) + 1 :]))
    return max(existing) + 1 if existing else 1


def get_output_path(outputs_dir: Path, command: str, digest: str, ext: str = ".json") -> Path:
    """Return ``outputs_dir/<command>/<digest[:12]>_<N><ext>``, creating the folder."""
    if not command:
        raise ValueError("command is required for output path")
    if not digest:
        raise ValueError("digest is required for output path")
    ext = ext if ext.startswith(".") else f".{ext}"
    folder = outputs_dir / command
    ensure_dir(folder)
    base = folder / f"{digest[:DIGEST_PREFIX]}{ext}"
    return folder / f"{digest[:DIGEST_PREFIX]}_{_get_next_run_number(base)}{ext}"
