#!/usr/bin/env python3
"""CLI entrypoint: ``arrival <subcommand> [options]``.

Responsibilities (kept intentionally thin):
 1. Parse arguments; each subcommand module contributes its own flags.
 2. Resolve settings (defaults < ``.env``/``ARRIVAL_*`` < flags) and configure logging.
 3. Delegate to the subcommand and map failures onto the exit-code contract:

    0  success
    1  numerical or configuration error, failed check
    2  standing assumption violated (D psi != 0)
"""

from __future__ import annotations

import argparse
import logging
import sys
from types import ModuleType
from typing import Dict, List, Optional

from arrival_uncertainty import __version__
from arrival_uncertainty.cli import density, fit, groundstate, montecarlo, report, sweep, verify
from arrival_uncertainty.cli.common import common_parser, resolve_settings
from arrival_uncertainty.core.errors import ArrivalError, AssumptionViolated
from arrival_uncertainty.utils.logger import clear_run, configure_logging, get_logger

log = get_logger("arrival_uncertainty.cli")

COMMANDS: Dict[str, ModuleType] = {
    "report": report,
    "density": density,
    "sweep": sweep,
    "montecarlo": montecarlo,
    "verify": verify,
    "groundstate": groundstate,
    "fit": fit,
}


def build_argument_parser() -> argparse.ArgumentParser:
    """Create the top-level parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="arrival",
        description="Arrival-time statistics of absorptive quantum systems and energy-time uncertainty checks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    parent = common_parser()
    for name, module in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[parent], help=module.HELP, description=module.HELP)
        module.add_arguments(sub)
    return parser


def run_main(argv: Optional[List[str]] = None) -> int:
    """Internal entrypoint returning an exit code (no SystemExit)."""
    parser = build_argument_parser()
    args = parser.parse_args(argv)
    configure_logging(logging.DEBUG if args.verbose else None)
    try:
        settings = resolve_settings(args)
        log.debug("running %s with %s", args.command, settings)
        return COMMANDS[args.command].run(args, settings)
    except AssumptionViolated as e:
        log.error("%s", e)
        return 2
    except (ArrivalError, ValueError, FileNotFoundError) as e:
        log.error("%s: %s", type(e).__name__, e)
        return 1
    finally:
        clear_run()


def main(argv: Optional[List[str]] = None) -> None:
    """Public CLI entrypoint raising SystemExit."""
    raise SystemExit(run_main(argv))


if __name__ == "__main__":  # pragma: no cover
    main(sys.argv[1:])
