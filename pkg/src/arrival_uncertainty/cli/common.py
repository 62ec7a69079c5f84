"""Flags and plumbing shared by every subcommand."""

from __future__ import annotations

import argparse
import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from arrival_uncertainty.config.settings import Settings, load_settings
from arrival_uncertainty.config.system_config import SystemConfig, config_digest, dump_config, load_config
from arrival_uncertainty.core.absorption import AbsorptiveSystem
from arrival_uncertainty.core.errors import ConfigError
from arrival_uncertainty.core.linops import StateVector
from arrival_uncertainty.core.runner import RunRecord, RunRecorder, Table
from arrival_uncertainty.utils.path_utils import resolve_config_path

# Column units of tabular output: times in hbar / energy of the config.
TIME_UNIT = "hbar/E"
RATE_UNIT = "E/hbar"


def common_parser() -> argparse.ArgumentParser:
    """Parent parser holding the global flags; attached to every subcommand."""
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group("Global", "Options shared by all subcommands")
    group.add_argument("--config", type=Path, help="System configuration file (YAML or JSON) or the name of a shipped one")
    group.add_argument("--hbar", type=float, help="Action unit when the config does not set one (env ARRIVAL_HBAR)")
    group.add_argument("--seed", type=int, help="Base random seed (env ARRIVAL_SEED)")
    group.add_argument("--tol", type=float, help="Tolerance of the D psi = 0 assumption (env ARRIVAL_TOL)")
    group.add_argument("--format", dest="output_format", choices=["json", "csv"], help="Output format (env ARRIVAL_FORMAT)")
    group.add_argument("--out", type=Path, help="Write output to this path instead of outputs/<command>/")
    group.add_argument("--outputs-dir", type=Path, help="Root of saved outputs (env ARRIVAL_OUTPUTS_DIR)")
    group.add_argument("--no-save", action="store_true", help="Print only; do not write an output file")
    group.add_argument("--jobs", type=int, help="Worker threads for sweeps, sampling and batteries (env ARRIVAL_JOBS)")
    group.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    return parser


def resolve_settings(args: argparse.Namespace, base: Optional[Settings] = None) -> Settings:
    """Environment settings with the command-line flags applied on top."""
    settings = (base or load_settings()).override(
        hbar=args.hbar,
        seed=args.seed,
        tol=args.tol,
        output_format=args.output_format,
        outputs_dir=args.outputs_dir,
        jobs=args.jobs,
    )
    if settings.jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {settings.jobs}", field="jobs")
    if not settings.hbar > 0:
        raise ConfigError(f"hbar must be > 0, got {settings.hbar}", field="hbar")
    return settings


@dataclass
class LoadedSystem:
    config: SystemConfig
    system: AbsorptiveSystem
    psi: StateVector
    digest: str


def load_system(args: argparse.Namespace, settings: Settings) -> LoadedSystem:
    if args.config is None:
        raise ConfigError("this command needs --config PATH", field="config")
    config = load_config(resolve_config_path(args.config))
    system, psi = config.build(settings.hbar)
    if (system.condition_cap, system.horizon_cap) != (settings.condition_cap, settings.horizon_cap):
        system = replace(system, condition_cap=settings.condition_cap, horizon_cap=settings.horizon_cap)
    return LoadedSystem(config, system, psi, config_digest(system, psi))


def parameter_digest(command: str, parameters: Dict[str, Any]) -> str:
    """Digest for commands that run without a system configuration."""
    payload = json.dumps({"command": command, **parameters}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()


def recorder(args: argparse.Namespace, settings: Settings, command: str, digest: str, seeds: Sequence[int] = ()) -> RunRecorder:
    return RunRecorder(
        command=command,
        digest=digest,
        seeds=seeds,
        output_format=settings.output_format,
        out=args.out,
        outputs_dir=settings.outputs_dir,
        save=not args.no_save,
    )


def system_recorder(
    args: argparse.Namespace, settings: Settings, command: str, loaded: LoadedSystem, seeds: Sequence[int] = ()
) -> RunRecorder:
    """Recorder that also saves the resolved system as an explicit-matrix YAML document."""
    rec = recorder(args, settings, command, loaded.digest, seeds)
    rec.config_text = dump_config(loaded.system, loaded.psi)
    return rec


def emit(rec: RunRecorder, outputs: Dict[str, Any], table: Optional[Table] = None) -> RunRecord:
    record = rec.finish(outputs, table)
    print(rec.text, end="")
    return record
