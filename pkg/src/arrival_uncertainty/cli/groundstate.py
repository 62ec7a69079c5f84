"""``arrival groundstate``: discretized oscillator and wall-linear spectra against their exact values."""

from __future__ import annotations

import argparse
from typing import Any, Dict, List

import numpy as np
from scipy import special

from arrival_uncertainty.cli.common import emit, parameter_digest, recorder
from arrival_uncertainty.config.settings import Settings
from arrival_uncertainty.core.groundstate import (
    OSCILLATOR_EXTENT,
    WALL_EXTENT,
    Grid,
    oscillator_spectrum,
    wall_linear_ground_state,
    wall_linear_spectrum,
)
from arrival_uncertainty.core.minimality import airy_negative_zeros
from arrival_uncertainty.core.runner import Table

HELP = "Solve the oscillator and wall-linear eigenproblems on a grid"

EIGENVECTOR_TOL = 1e-4
# Flags that change where output goes but not what is computed.
_OUTPUT_FLAGS = {"command", "config", "out", "outputs_dir", "no_save", "output_format", "verbose", "jobs", "seed"}


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--problem", choices=["oscillator", "wall", "both"], default="both")
    parser.add_argument("--k", type=int, default=2, help="Eigenvalues per problem (default: 2)")
    parser.add_argument("--oscillator-points", type=int, default=2000, help="Interior points (default: 2000)")
    parser.add_argument("--oscillator-half-width", type=float, default=10.0, help="Grid is [-w, w] (default: 10)")
    parser.add_argument("--wall-points", type=int, default=4000, help="Interior points (default: 4000)")
    parser.add_argument("--wall-t-max", type=float, default=20.0, help="Grid is [0, t_max] (default: 20)")
    parser.add_argument("--extrapolate", action="store_true", help="Report Richardson-extrapolated eigenvalues")


def eigenvector_deviation(grid: Grid) -> float:
    """Max pointwise gap between the discrete ground state and ``Ai(t + Z1)``, both unit-normalized."""
    t, v = wall_linear_ground_state(grid)
    z1 = airy_negative_zeros(1)[0]
    ref = special.airy(t + z1)[0]
    ref = ref / np.sqrt(np.sum(ref**2) * grid.spacing)
    return float(np.max(np.abs(v - ref)))


def run(args: argparse.Namespace, settings: Settings) -> int:
    parameters: Dict[str, Any] = {k: v for k, v in vars(args).items() if k not in _OUTPUT_FLAGS}
    rec = recorder(args, settings, "groundstate", parameter_digest("groundstate", parameters))
    rows: List[List[Any]] = []
    outputs: Dict[str, Any] = {}
    if args.problem in ("oscillator", "both"):
        grid = Grid.symmetric(max(args.oscillator_half_width, OSCILLATOR_EXTENT), args.oscillator_points)
        values = oscillator_spectrum(grid, args.k, extrapolate=args.extrapolate)
        exact = [2.0 * n + 1.0 for n in range(args.k)]
        rows.extend(["oscillator", n, v, e, abs(v - e)] for n, (v, e) in enumerate(zip(values, exact)))
        outputs["oscillator"] = {"grid": vars(grid) | {"spacing": grid.spacing}, "eigenvalues": values}
    if args.problem in ("wall", "both"):
        grid = Grid.wall(max(args.wall_t_max, WALL_EXTENT), args.wall_points)
        values = wall_linear_spectrum(grid, args.k, extrapolate=args.extrapolate)
        exact = [-z for z in airy_negative_zeros(args.k)]
        rows.extend(["wall", n, v, e, abs(v - e)] for n, (v, e) in enumerate(zip(values, exact)))
        deviation = eigenvector_deviation(grid)
        outputs["wall"] = {
            "grid": vars(grid) | {"spacing": grid.spacing},
            "eigenvalues": values,
            "eigenvector_deviation": deviation,
            "eigenvector_matches": deviation <= EIGENVECTOR_TOL,
        }
    outputs["max_error"] = max(r[4] for r in rows)
    table = Table(("problem", "index", "eigenvalue", "exact", "error"), ("-", "-", "1", "1", "1"), rows)
    emit(rec, outputs, table)
    return 0
