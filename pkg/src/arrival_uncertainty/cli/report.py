"""``arrival report``: moments, energy spread and both relation ratios for one system."""

from __future__ import annotations

import argparse
from typing import Any, Dict

from arrival_uncertainty.cli.common import emit, load_system, system_recorder
from arrival_uncertainty.config.settings import Settings
from arrival_uncertainty.core.arrival import METHODS, ArrivalStats, uncertainty_report
from arrival_uncertainty.core.errors import AssumptionViolated
from arrival_uncertainty.core.minimality import ground_state_bounds
from arrival_uncertainty.utils.logger import get_logger

log = get_logger(__name__)

HELP = "Arrival-time and energy statistics with the uncertainty relation ratios"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=METHODS, default="closed_form", help="Moment method (default: closed_form)")
    parser.add_argument(
        "--check-dilation",
        action="store_true",
        help="Also integrate the exit flux and report |int ||J psi||^2 dt - p|",
    )


def report_outputs(stats: ArrivalStats, status: str) -> Dict[str, Any]:
    bounds = ground_state_bounds(stats)
    return {
        "status": status,
        "relations_hold": stats.relations_hold,
        **stats.as_dict(),
        "ground_state_bounds": {
            "x_expectation": bounds.x_expectation,
            "y_expectation": bounds.y_expectation,
            "x0": bounds.x0,
            "y0": bounds.y0,
            "holds": bounds.holds,
        },
    }


def run(args: argparse.Namespace, settings: Settings) -> int:
    loaded = load_system(args, settings)
    rec = system_recorder(args, settings, "report", loaded)
    try:
        stats = uncertainty_report(
            loaded.system, loaded.psi, method=args.method, tol=settings.tol, check_dilation=args.check_dilation
        )
    except AssumptionViolated as e:
        log.error("%s", e)
        emit(rec, report_outputs(e.report, "assumption_violated"))
        return 2
    emit(rec, report_outputs(stats, "ok"))
    return 0 if stats.relations_hold else 1
