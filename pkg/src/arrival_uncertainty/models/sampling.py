"""First-jump Monte Carlo sampling of arrival times and its KS check.

For pure-loss dynamics the absorption time has distribution function
``1 - S(t)``, so one uniform draw per particle, inverted through S, gives
an exact sample. Clicks are then thinned with the detection efficiency q.
Draws come in fixed chunks, each from its own Philox sub-stream, so the
merged sample does not depend on how many workers produced it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.stats import kstest

from arrival_uncertainty.core.absorption import (
    AbsorptiveSystem,
    StateLike,
    StatePropagator,
    absorption_probability,
)
from arrival_uncertainty.core.errors import HorizonTooSmall, NonpositiveParameter
from arrival_uncertainty.utils.logger import get_logger
from arrival_uncertainty.utils.rng import make_rng

__all__ = ["SampleSet", "KSResult", "quantum_jump_sample", "ks_compare", "CHUNK_SIZE"]

log = get_logger(__name__)

CHUNK_SIZE = 10_000
HORIZON_TOL = 1e-6
TABLE_POINTS = 2049
BISECTION_STEPS = 60
KS_LEVEL = 0.01
KS_MIN_CLICKS = 1000


@dataclass(frozen=True, eq=False)
class SampleSet:
    arrival_times: np.ndarray
    no_click_count: int
    seed: int
    n_requested: int
    q: float = 1.0
    t_max: float = 0.0

    def __post_init__(self) -> None:
        times = np.sort(np.asarray(self.arrival_times, dtype=float))
        times.setflags(write=False)
        object.__setattr__(self, "arrival_times", times)
        if times.size + self.no_click_count != self.n_requested:
            raise ValueError(
                f"{times.size} clicks + {self.no_click_count} no-clicks != {self.n_requested} requested"
            )

    @property
    def clicks(self) -> int:
        return int(self.arrival_times.size)

    def histogram(self, bins: int = 100) -> Dict[str, List[float]]:
        """Click histogram normalized to unit area (an estimate of P(t))."""
        density, edges = np.histogram(self.arrival_times, bins=bins, range=(0.0, self.t_max), density=True)
        return {"edges": edges.tolist(), "density": density.tolist()}


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    clicks: int
    verdict: str

    def as_dict(self) -> Dict[str, Any]:
        return {"statistic": self.statistic, "p_value": self.p_value, "clicks": self.clicks, "verdict": self.verdict}


def _suggest_horizon(prop: StatePropagator, floor: float, t_max: float, cap: float) -> float:
    T = t_max
    while float(prop.survival(T)) - floor > HORIZON_TOL and T < cap:
        T *= 2.0
    return T


def quantum_jump_sample(
    system: AbsorptiveSystem,
    psi: StateLike,
    n: int,
    q: float = 1.0,
    seed: int = 0,
    t_max: Optional[float] = None,
    jobs: int = 1,
) -> SampleSet:
    """Draw ``n`` first-jump arrival times, keeping each click with probability q.

    Raises
    ------
    HorizonTooSmall
        If more than 1e-6 of the absorbable weight survives past ``t_max``;
        the error carries a suggested horizon.
    """
    if n < 1:
        raise NonpositiveParameter(f"sample count must be >= 1, got {n}")
    if not 0.0 < q <= 1.0:
        raise NonpositiveParameter(f"detection efficiency q must lie in (0, 1], got {q}")
    prop = StatePropagator(system, psi)
    p = absorption_probability(system, psi)
    floor = 1.0 - p
    if t_max is None:
        t_max = _suggest_horizon(prop, floor, system.natural_time, system.horizon_cap)
    if not t_max > 0:
        raise NonpositiveParameter(f"t_max must be > 0, got {t_max}")
    excess = float(prop.survival(t_max)) - floor
    if excess > HORIZON_TOL:
        suggested = _suggest_horizon(prop, floor, t_max, system.horizon_cap)
        raise HorizonTooSmall(
            f"S(t_max) exceeds 1-p by {excess:.3e} > {HORIZON_TOL:.0e}; try t_max >= {suggested:.6g}",
            suggested_t_max=suggested,
        )

    grid = np.linspace(0.0, t_max, TABLE_POINTS)
    absorbed = np.maximum.accumulate(1.0 - np.clip(prop.survival(grid), 0.0, 1.0))
    ceiling = float(absorbed[-1])

    def draw(chunk: int) -> np.ndarray:
        size = min(CHUNK_SIZE, n - chunk * CHUNK_SIZE)
        rng = make_rng(seed, chunk)
        u = rng.random(size)
        keep = rng.random(size) <= q
        hit = (u <= ceiling) & keep
        target = u[hit]
        idx = np.clip(np.searchsorted(absorbed, target), 1, TABLE_POINTS - 1)
        lo, hi = grid[idx - 1], grid[idx]
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            below = 1.0 - prop.survival(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    chunks = range((n + CHUNK_SIZE - 1) // CHUNK_SIZE)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(draw, chunks))
    else:
        parts = [draw(c) for c in chunks]
    times = np.concatenate(parts) if parts else np.empty(0)
    log.info("sampled %d/%d clicks (q=%.3g, p=%.6f, t_max=%.4g)", times.size, n, q, p, t_max)
    return SampleSet(times, n - times.size, seed, n, q, float(t_max))


def ks_compare(samples: SampleSet, system: AbsorptiveSystem, psi: StateLike) -> KSResult:
    """One-sample KS test of the clicks against ``(1 - S(t)) / (1 - S(t_max))``.

    Verdict is ``inconclusive`` under 1000 clicks, else ``fail`` when the
    p-value is below 0.01 and ``pass`` otherwise.
    """
    prop = StatePropagator(system, psi)
    norm = 1.0 - float(prop.survival(samples.t_max))

    def cdf(t: np.ndarray) -> np.ndarray:
        return np.clip((1.0 - prop.survival(np.asarray(t, dtype=float))) / norm, 0.0, 1.0)

    if samples.clicks == 0:
        return KSResult(statistic=float("nan"), p_value=float("nan"), clicks=0, verdict="inconclusive")
    result = kstest(samples.arrival_times, cdf)
    statistic, p_value = float(result.statistic), float(result.pvalue)
    if samples.clicks < KS_MIN_CLICKS:
        verdict = "inconclusive"
    else:
        verdict = "fail" if p_value < KS_LEVEL else "pass"
    log.debug("KS D=%.4g p=%.4g on %d clicks -> %s", statistic, p_value, samples.clicks, verdict)
    return KSResult(statistic, p_value, samples.clicks, verdict)
