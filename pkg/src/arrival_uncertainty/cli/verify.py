"""``arrival verify``: randomized battery over generated systems and gap-lemma instances."""

from __future__ import annotations

import argparse
from typing import Tuple

from arrival_uncertainty.cli.common import emit, parameter_digest, recorder
from arrival_uncertainty.config.settings import Settings
from arrival_uncertainty.core.errors import ConfigError
from arrival_uncertainty.core.verification import run_battery

HELP = "Check the relations, certificates, dilation identities and gap lemma on random instances"


def parse_dims(text: str) -> Tuple[int, int]:
    """``"2-8"`` or ``"4"`` -> inclusive dimension range."""
    try:
        parts = [int(x) for x in text.split("-")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must look like 2-8, got {text!r}")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"dims must look like 2-8, got {text!r}")
    return parts[0], parts[1]


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--count", type=int, default=500, help="Random systems (default: 500)")
    parser.add_argument("--dims", type=parse_dims, default=(2, 8), help="Dimension range, e.g. 2-8 (default)")
    parser.add_argument("--gap-instances", type=int, help="Gap-lemma instances (default: 4 x count)")
    parser.add_argument("--fit-restarts", type=int, default=5, help="Optimizer starts per certificate fit")
    parser.add_argument("--no-fits", action="store_true", help="Skip certificate fits")
    parser.add_argument("--progress", action="store_true", help="Show progress bars")
    parser.add_argument("--relation-sign", type=float, default=1.0, help=argparse.SUPPRESS)


def run(args: argparse.Namespace, settings: Settings) -> int:
    if args.count < 0:
        raise ConfigError(f"count must be >= 0, got {args.count}", field="count")
    if not 2 <= args.dims[0] <= args.dims[1]:
        raise ConfigError(f"dims must satisfy 2 <= min <= max, got {args.dims}", field="dims")
    parameters = {
        "count": args.count,
        "dims": list(args.dims),
        "seed": settings.seed,
        "gap_instances": args.gap_instances,
        "fit_restarts": args.fit_restarts,
        "fits": not args.no_fits,
    }
    rec = recorder(args, settings, "verify", parameter_digest("verify", parameters), seeds=[settings.seed])
    summary = run_battery(
        count=args.count,
        dims=args.dims,
        seed=settings.seed,
        jobs=settings.jobs,
        fit_restarts=args.fit_restarts,
        relation_sign=args.relation_sign,
        gap_instances=args.gap_instances,
        fits=not args.no_fits,
        progress=args.progress,
    )
    emit(rec, summary.as_dict())
    return 0 if summary.passed else 1
