"""``arrival sweep``: both uncertainty products along a model's sweep parameter.

For two_level the parameter is ``gamma/omega``; for ion it is ``omega23``.
Products are reported in units of hbar. The minima of ``<T> DeltaE`` and of
``DeltaT DeltaE`` are located separately, each refined by golden-section search
between the grid neighbours of its best grid point.
"""

from __future__ import annotations

import argparse
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from arrival_uncertainty.cli.common import emit, load_system, system_recorder
from arrival_uncertainty.config.settings import Settings
from arrival_uncertainty.core.arrival import uncertainty_report
from arrival_uncertainty.core.errors import ConfigError
from arrival_uncertainty.core.runner import Table
from arrival_uncertainty.models.base import SystemModel
from arrival_uncertainty.utils.logger import get_logger

log = get_logger(__name__)

HELP = "Sweep a model parameter and locate the minima of <T> DeltaE and DeltaT DeltaE"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--start", type=float, required=True, help="First sweep value")
    parser.add_argument("--stop", type=float, required=True, help="Last sweep value")
    parser.add_argument("--points", type=int, default=200, help="Number of sweep values (default: 200)")
    parser.add_argument("--no-refine", action="store_true", help="Report the best grid point without refinement")


def products(model: SystemModel, value: float, hbar: float, tol: float) -> Tuple[float, float]:
    """``(<T> DeltaE / hbar, DeltaT DeltaE / hbar)`` at one sweep value."""
    system, psi = model.with_sweep_value(value).build(hbar)
    stats = uncertainty_report(system, psi, tol=tol)
    return stats.mean_T * stats.std_E / hbar, stats.std_T * stats.std_E / hbar


def locate_minimum(
    objective: Callable[[float], float], values: np.ndarray, samples: np.ndarray, refine: bool
) -> Tuple[float, float]:
    """Best grid point, refined by golden-section search inside its grid neighbours.

    An edge minimum has no bracket and is returned unrefined.
    """
    best = int(np.argmin(samples))
    grid = (float(values[best]), float(samples[best]))
    if not refine or best in (0, len(values) - 1):
        return grid
    bracket = (float(values[best - 1]), float(values[best]), float(values[best + 1]))
    try:
        result = minimize_scalar(objective, bracket=bracket, method="golden", options={"xtol": 1e-10})
    except ValueError:
        # a tie with a neighbour is not a strict bracket
        log.warning("no strict bracket around the grid minimum; keeping grid value")
        return grid
    if not np.isfinite(result.fun) or result.fun > grid[1] or not bracket[0] <= result.x <= bracket[2]:
        log.warning("golden-section refinement left the bracket; keeping grid value")
        return grid
    return float(result.x), float(result.fun)


def run(args: argparse.Namespace, settings: Settings) -> int:
    loaded = load_system(args, settings)
    if not loaded.config.is_model:
        raise ConfigError("sweep needs a named model block in the configuration", field="model")
    model = loaded.config.model_instance()
    if model.sweep_label is None:
        raise ConfigError(f"model '{model.name}' has no sweepable parameter", field="model")
    if args.points < 1:
        raise ConfigError(f"points must be >= 1, got {args.points}", field="points")
    if not args.stop >= args.start:
        raise ConfigError(f"stop {args.stop} is below start {args.start}", field="stop")

    hbar = loaded.system.hbar
    values = np.linspace(args.start, args.stop, args.points) if args.points > 1 else np.array([args.start])
    rec = system_recorder(args, settings, "sweep", loaded)

    def evaluate(v: float) -> Tuple[float, float]:
        return products(model, float(v), hbar, settings.tol)

    if settings.jobs > 1:
        with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
            results: List[Tuple[float, float]] = list(pool.map(evaluate, values))
    else:
        results = [evaluate(v) for v in values]
    mean_products = np.array([r[0] for r in results])
    var_products = np.array([r[1] for r in results])

    minima: Dict[str, Tuple[Optional[float], Optional[float]]] = {"mean": (None, None), "var": (None, None)}
    if values.size >= 3:
        for index, (key, samples) in enumerate((("mean", mean_products), ("var", var_products))):
            minima[key] = locate_minimum(lambda v, i=index: evaluate(v)[i], values, samples, not args.no_refine)
            if int(np.argmin(samples)) in (0, values.size - 1):
                log.warning("%s product minimum sits at the edge of the sweep range; widen --start/--stop", key)
    else:
        log.info("sweep has fewer than 3 points; no minimizer reported")
    minimizer, min_mean = minima["mean"]
    var_minimizer, min_var = minima["var"]

    outputs = {
        "model": model.name,
        "parameter": model.sweep_label,
        "points": int(values.size),
        "minimizer": minimizer,
        "min_mean_product": min_mean,
        "var_minimizer": var_minimizer,
        "min_var_product": min_var,
        "var_product_at_minimizer": products(model, minimizer, hbar, settings.tol)[1] if minimizer is not None else None,
    }
    table = Table(
        (model.sweep_label, "mean_T*std_E", "std_T*std_E"),
        ("1" if model.sweep_label == "gamma/omega" else "rad/s", "hbar", "hbar"),
        [list(r) for r in zip(values, mean_products, var_products)],
    )
    emit(rec, outputs, table)
    return 0
