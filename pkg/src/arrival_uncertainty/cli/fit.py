"""``arrival fit``: L1 fits to the minimal Gaussian and Airy families with their certificates.

``--baseline PATH`` stores the measured distances on first use; later runs
compare against them and fail when a distance drifts by more than
``--baseline-tol``.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import Any, Dict

from arrival_uncertainty.cli.common import emit, load_system, system_recorder
from arrival_uncertainty.config.settings import Settings
from arrival_uncertainty.core.arrival import density_function, uncertainty_report
from arrival_uncertainty.core.errors import ConfigError
from arrival_uncertainty.core.minimality import KINDS, FitTarget, constants, fit_minimal
from arrival_uncertainty.utils.logger import get_logger
from arrival_uncertainty.utils.path_utils import ensure_dir

log = get_logger(__name__)

HELP = "Fit the minimal arrival-time densities and check the near-minimality certificates"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kind", choices=[*KINDS, "both"], default="both")
    parser.add_argument("--restarts", type=int, default=5, help="Optimizer starts per fit (default: 5)")
    parser.add_argument("--baseline", type=Path, help="JSON file of regression distances (created if missing)")
    parser.add_argument("--baseline-tol", type=float, default=1e-6, help="Allowed distance drift (default: 1e-6)")


def compare_baseline(path: Path, digest: str, distances: Dict[str, float], tol: float) -> Dict[str, Any]:
    """Store ``distances`` under ``digest`` when absent, else report the drift per kind."""
    stored: Dict[str, Any] = json.loads(path.read_text(encoding="utf-8")) if path.is_file() else {}
    if not isinstance(stored, dict):
        raise ConfigError("baseline file must hold a JSON object", field="baseline")
    entry = stored.get(digest)
    if entry is None or any(kind not in entry for kind in distances):
        stored[digest] = {**(entry or {}), **distances}
        ensure_dir(path.parent)
        path.write_text(json.dumps(stored, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        log.info("Stored baseline distances in %s", path)
        return {"path": str(path), "stored": True, "drift": {}, "within_tolerance": True}
    drift = {kind: distances[kind] - float(entry[kind]) for kind in distances}
    within = all(abs(d) <= tol for d in drift.values())
    if not within:
        log.error("fit distances drifted from baseline %s: %s", path, drift)
    return {"path": str(path), "stored": False, "drift": drift, "within_tolerance": within}


def run(args: argparse.Namespace, settings: Settings) -> int:
    if args.restarts < 1:
        raise ConfigError(f"restarts must be >= 1, got {args.restarts}", field="restarts")
    loaded = load_system(args, settings)
    rec = system_recorder(args, settings, "fit", loaded)
    stats = uncertainty_report(loaded.system, loaded.psi, tol=settings.tol)
    density = density_function(loaded.system, loaded.psi, stats.p)
    kinds = KINDS if args.kind == "both" else (args.kind,)
    fits = {
        kind: fit_minimal(density, kind, FitTarget.from_stats(kind, stats), restarts=args.restarts, jobs=settings.jobs)
        for kind in kinds
    }
    outputs: Dict[str, Any] = {
        "p": stats.p,
        "epsilon_var": stats.epsilon_var,
        "epsilon_mean": stats.epsilon_mean,
        "fits": {kind: fit.as_dict() for kind, fit in fits.items()},
        "constants": constants().as_dict(),
    }
    ok = all(fit.satisfied is not False for fit in fits.values())
    if args.baseline is not None:
        baseline = compare_baseline(args.baseline, loaded.digest, {k: f.distance for k, f in fits.items()}, args.baseline_tol)
        outputs["baseline"] = baseline
        ok = ok and baseline["within_tolerance"]
    emit(rec, outputs)
    return 0 if ok else 1
