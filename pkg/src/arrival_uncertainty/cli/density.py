"""``arrival density``: rows ``(t, P(t), S(t))`` on a uniform time grid."""

from __future__ import annotations

import argparse

import numpy as np

from arrival_uncertainty.cli.common import RATE_UNIT, TIME_UNIT, emit, load_system, system_recorder
from arrival_uncertainty.config.settings import Settings
from arrival_uncertainty.core.absorption import StatePropagator, absorption_probability, integration_horizon
from arrival_uncertainty.core.arrival import density_function
from arrival_uncertainty.core.errors import ConfigError
from arrival_uncertainty.core.runner import Table

HELP = "Tabulate the arrival-time density and the survival probability"

MAX_ROWS = 1_000_000
# Secondary maxima below this fraction of the main peak do not break unimodality.
SECONDARY_PEAK_TOL = 1e-2


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--t-min", type=float, default=0.0, help="First grid time (default: 0)")
    parser.add_argument("--t-max", type=float, help="Last grid time (default: integration horizon)")
    parser.add_argument("--step", type=float, default=0.01, help="Grid spacing (default: 0.01)")


def secondary_peak_ratio(P: np.ndarray, peak: int) -> float:
    """Height of the largest local maximum other than ``peak``, relative to ``P[peak]``."""
    if P.size < 3 or not P[peak] > 0:
        return 0.0
    is_max = (P[1:-1] > P[:-2]) & (P[1:-1] >= P[2:])
    others = [i + 1 for i in np.nonzero(is_max)[0] if i + 1 != peak]
    return float(max(P[others]) / P[peak]) if others else 0.0


def run(args: argparse.Namespace, settings: Settings) -> int:
    loaded = load_system(args, settings)
    system, psi = loaded.system, loaded.psi
    p = absorption_probability(system, psi)
    t_max = args.t_max if args.t_max is not None else integration_horizon(system, psi, p=p)
    if args.t_min < 0:
        raise ConfigError(f"t-min must be >= 0, got {args.t_min}", field="t-min")
    if not args.step > 0:
        raise ConfigError(f"step must be > 0, got {args.step}", field="step")
    if not t_max >= args.t_min:
        raise ConfigError(f"t-max {t_max} is below t-min {args.t_min}", field="t-max")
    count = int(np.floor((t_max - args.t_min) / args.step + 1e-9)) + 1
    if count > MAX_ROWS:
        raise ConfigError(f"grid would have {count} rows (> {MAX_ROWS}); increase --step", field="step")
    times = args.t_min + args.step * np.arange(count)

    rec = system_recorder(args, settings, "density", loaded)
    P = density_function(system, psi, p)(times)
    S = StatePropagator(system, psi).survival(times)
    peak = int(np.argmax(P))
    secondary = secondary_peak_ratio(P, peak)
    outputs = {
        "p": p,
        "t_min": float(times[0]),
        "t_max": float(times[-1]),
        "step": args.step,
        "rows": count,
        "peak_time": float(times[peak]),
        "peak_density": float(P[peak]),
        "secondary_peak_ratio": secondary,
        "unimodal": secondary < SECONDARY_PEAK_TOL,
    }
    table = Table(("t", "P", "S"), (TIME_UNIT, RATE_UNIT, "1"), [list(r) for r in zip(times, P, S)])
    emit(rec, outputs, table)
    return 0
