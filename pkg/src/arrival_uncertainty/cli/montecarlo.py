"""``arrival montecarlo``: seeded first-jump click times and a KS test against P(t)."""

from __future__ import annotations

import argparse

from arrival_uncertainty.cli.common import TIME_UNIT, emit, load_system, system_recorder
from arrival_uncertainty.config.settings import Settings
from arrival_uncertainty.core.errors import ConfigError, HorizonTooSmall
from arrival_uncertainty.core.runner import Table
from arrival_uncertainty.models.sampling import ks_compare, quantum_jump_sample
from arrival_uncertainty.utils.logger import get_logger

log = get_logger(__name__)

HELP = "Sample first-jump arrival times and compare them with the analytic density"

MIN_SAMPLES = 100


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=100_000, help="Number of runs (default: 100000)")
    parser.add_argument("--q", type=float, default=1.0, help="Detection efficiency in (0, 1] (default: 1)")
    parser.add_argument("--t-max", type=float, help="Sampling horizon (default: chosen so the tail is below 1e-6)")
    parser.add_argument("--bins", type=int, default=100, help="Histogram bins in the output (default: 100)")


def run(args: argparse.Namespace, settings: Settings) -> int:
    if args.n < MIN_SAMPLES:
        raise ConfigError(f"n must be >= {MIN_SAMPLES}, got {args.n}", field="n")
    loaded = load_system(args, settings)
    rec = system_recorder(args, settings, "montecarlo", loaded, seeds=[settings.seed])
    try:
        samples = quantum_jump_sample(
            loaded.system, loaded.psi, args.n, q=args.q, seed=settings.seed, t_max=args.t_max, jobs=settings.jobs
        )
    except HorizonTooSmall as e:
        log.error("%s (rerun with --t-max %.6g)", e, e.suggested_t_max)
        return 1
    ks = ks_compare(samples, loaded.system, loaded.psi)
    outputs = {
        "n_requested": samples.n_requested,
        "clicks": samples.clicks,
        "no_click_count": samples.no_click_count,
        "q": samples.q,
        "seed": samples.seed,
        "t_max": samples.t_max,
        "ks": ks.as_dict(),
        "histogram": samples.histogram(args.bins),
    }
    table = Table(("t",), (TIME_UNIT,), [[t] for t in samples.arrival_times])
    emit(rec, outputs, table)
    return 1 if ks.verdict == "fail" else 0
