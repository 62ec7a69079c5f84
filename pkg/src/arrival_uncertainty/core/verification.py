"""Randomized battery over generated systems and gap-lemma instances.

Each system case checks both uncertainty relations, the variance inequality
between the physical and dilated energy spreads, the dilation identity
``int ||J psi(t)||^2 dt = p``, agreement of closed-form and quadrature
moments to 1e-7 relative, the intertwining ``R K = K^* R``, positivity of an
interval operator ``F([t, s])``, the ground-state expectation bounds and the
near-minimality certificates of both kinds (fitted unless trivial).

Cases are generated from ``make_rng(seed, index)`` and merged in index order,
so the summary depends only on the arguments.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from tqdm import tqdm

from arrival_uncertainty.core.absorption import arrival_operator
from arrival_uncertainty.core.arrival import RELATION_SLACK, arrival_moments, density_function, uncertainty_report
from arrival_uncertainty.core.errors import ArrivalError, DegenerateGroundState
from arrival_uncertainty.core.groundstate import gap_lemma_check
from arrival_uncertainty.core.minimality import KINDS, FitTarget, fit_minimal, gamma_for, ground_state_bounds
from arrival_uncertainty.models.random_system import random_density_matrix, random_hermitian, random_system
from arrival_uncertainty.utils.logger import get_logger
from arrival_uncertainty.utils.rng import make_rng

__all__ = ["SystemCase", "GapCase", "BatterySummary", "check_system", "check_gap_instance", "run_battery"]

log = get_logger(__name__)

DILATION_TOL = 1e-6
METHOD_AGREEMENT = 1e-7
INTERTWINING_TOL = 1e-8
PSD_TOL = 1e-10
GAP_DIMS = (2, 10)
# Gap instances use streams above any system index.
GAP_STREAM_OFFSET = 1 << 32

T = TypeVar("T")


@dataclass
class SystemCase:
    index: int
    dim: int
    kernel_dim: int
    seed: int
    p: float = float("nan")
    ratio_var: float = float("nan")
    ratio_mean: float = float("nan")
    certificates: Dict[str, str] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass
class GapCase:
    index: int
    dim: int
    lhs: float = float("nan")
    rhs: float = float("nan")
    violations: List[str] = field(default_factory=list)
    skipped: bool = False

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass
class BatterySummary:
    seed: int
    dims: Tuple[int, int]
    systems: List[SystemCase]
    gaps: List[GapCase]

    @property
    def failures(self) -> List[Dict[str, Any]]:
        failed: List[Dict[str, Any]] = []
        failed.extend({"kind": "system", **asdict(c)} for c in self.systems if not c.passed)
        failed.extend({"kind": "gap", **asdict(c)} for c in self.gaps if not c.passed)
        return failed

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.systems) and all(c.passed for c in self.gaps)

    def certificate_counts(self) -> Dict[str, Dict[str, int]]:
        counts: Dict[str, Dict[str, int]] = {k: {} for k in KINDS}
        for case in self.systems:
            for kind, status in case.certificates.items():
                counts[kind][status] = counts[kind].get(status, 0) + 1
        return counts

    def as_dict(self) -> Dict[str, Any]:
        ratio_var = [c.ratio_var for c in self.systems if np.isfinite(c.ratio_var)]
        ratio_mean = [c.ratio_mean for c in self.systems if np.isfinite(c.ratio_mean)]
        return {
            "seed": self.seed,
            "dims": list(self.dims),
            "systems": len(self.systems),
            "system_failures": sum(not c.passed for c in self.systems),
            "gap_instances": len(self.gaps),
            "gap_failures": sum(not c.passed for c in self.gaps),
            "gap_skipped": sum(c.skipped for c in self.gaps),
            "min_ratio_var": min(ratio_var) if ratio_var else None,
            "min_ratio_mean": min(ratio_mean) if ratio_mean else None,
            "certificates": self.certificate_counts(),
            "passed": self.passed,
            "failures": self.failures[:20],
        }


def _draw_system(index: int, seed: int, dims: Tuple[int, int]) -> SystemCase:
    rng = make_rng(seed, index)
    dim = int(rng.integers(dims[0], dims[1] + 1))
    kernel_dim = int(rng.integers(1, dim))
    return SystemCase(index=index, dim=dim, kernel_dim=kernel_dim, seed=int(rng.integers(0, 2**31 - 1)))


def check_system(
    case: SystemCase, fit_restarts: int = 5, relation_sign: float = 1.0, fits: bool = True
) -> SystemCase:
    """Fill ``case`` with the results of every per-system check.

    ``relation_sign=-1`` inverts the relation checks, which must then fail.
    """
    try:
        system, psi = random_system(case.dim, case.kernel_dim, case.seed)
        stats = uncertainty_report(system, psi, strict=False, check_dilation=True)
    except ArrivalError as e:
        case.violations.append(f"error:{type(e).__name__}: {e}")
        return case
    case.p, case.ratio_var, case.ratio_mean = stats.p, stats.ratio_var, stats.ratio_mean
    v = case.violations
    if not stats.assumption_holds:
        v.append("assumption")
    if relation_sign * (stats.ratio_var - 1.0) <= 0.0:
        v.append("relation_variance")
    if relation_sign * (stats.ratio_mean - 1.0) < -RELATION_SLACK:
        v.append("relation_mean")
    v.extend(x for x in stats.violations if x not in ("relation_variance", "relation_mean"))
    if stats.dilation_residual is None or stats.dilation_residual > DILATION_TOL:
        v.append("dilation_identity")
    try:
        quad_mean, quad_second = arrival_moments(system, psi, "quadrature")
    except ArrivalError as e:
        v.append(f"quadrature:{type(e).__name__}")
    else:
        if not (
            np.isclose(quad_mean, stats.mean_T, rtol=METHOD_AGREEMENT, atol=0.0)
            and np.isclose(quad_second, stats.second_T, rtol=METHOD_AGREEMENT, atol=0.0)
        ):
            v.append("method_agreement")

    K, R = system.K, system.asymptotic.R
    scale = max(1.0, float(np.linalg.norm(K, 2)))
    if float(np.linalg.norm(R @ K - K.conj().T @ R, 2)) > INTERTWINING_TOL * scale:
        v.append("intertwining")
    F = arrival_operator(system, 0.5 * stats.mean_T, 2.0 * stats.mean_T)
    if float(np.linalg.eigvalsh(F)[0]) < -PSD_TOL:
        v.append("interval_operator_positivity")
    if not ground_state_bounds(stats).holds:
        v.append("ground_state_bounds")

    density = density_function(system, psi, stats.p)
    for kind in KINDS:
        target = FitTarget.from_stats(kind, stats)
        eps = target.epsilon if target.epsilon is not None else float("nan")
        if gamma_for(kind) * np.sqrt(max(eps, 0.0)) >= 2.0 or not fits:
            case.certificates[kind] = "trivial" if fits else "skipped"
            continue
        try:
            fit = fit_minimal(density, kind, target, restarts=fit_restarts)
        except ArrivalError as e:
            v.append(f"fit_{kind}:{type(e).__name__}")
            continue
        case.certificates[kind] = "satisfied" if fit.satisfied else "violated"
        if not fit.satisfied:
            v.append(f"certificate_{kind}")
    return case


def check_gap_instance(index: int, seed: int) -> GapCase:
    rng = make_rng(seed, GAP_STREAM_OFFSET + index)
    dim = int(rng.integers(GAP_DIMS[0], GAP_DIMS[1] + 1))
    case = GapCase(index=index, dim=dim)
    A = random_hermitian(dim, rng)
    # Half the instances sit close to the ground state, where the bound is informative.
    if rng.random() < 0.5:
        phi0 = np.linalg.eigh(A)[1][:, 0]
        mix = rng.uniform(0.0, 0.2)
        rho = (1.0 - mix) * np.outer(phi0, phi0.conj()) + mix * random_density_matrix(dim, rng)
    else:
        rho = random_density_matrix(dim, rng, rank=int(rng.integers(1, dim + 1)))
    try:
        report = gap_lemma_check(A, rho)
    except DegenerateGroundState:
        case.skipped = True
        return case
    case.lhs, case.rhs = report.lhs, report.rhs
    if not report.holds:
        case.violations.append("trace_norm_bound")
    if not report.fidelity_holds:
        case.violations.append("fidelity_bound")
    return case


def _fan_out(fn: Callable[[int], T], count: int, jobs: int, desc: str, progress: bool) -> List[T]:
    indices: Iterable[int] = range(count)
    if jobs <= 1:
        return [fn(i) for i in tqdm(indices, total=count, desc=desc, disable=not progress)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(tqdm(pool.map(fn, indices), total=count, desc=desc, disable=not progress))


def run_battery(
    count: int = 500,
    dims: Sequence[int] = (2, 8),
    seed: int = 0,
    jobs: int = 1,
    fit_restarts: int = 5,
    relation_sign: float = 1.0,
    gap_instances: Optional[int] = None,
    fits: bool = True,
    progress: bool = False,
) -> BatterySummary:
    """Run ``count`` random systems and ``gap_instances`` (default ``4 * count``) gap checks."""
    lo, hi = int(dims[0]), int(dims[1])
    if not 2 <= lo <= hi:
        raise ValueError(f"dims must satisfy 2 <= min <= max, got {tuple(dims)}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    gap_count = 4 * count if gap_instances is None else gap_instances

    def system_job(i: int) -> SystemCase:
        return check_system(_draw_system(i, seed, (lo, hi)), fit_restarts, relation_sign, fits)

    systems = _fan_out(system_job, count, jobs, "systems", progress)
    gaps = _fan_out(lambda j: check_gap_instance(j, seed), gap_count, jobs, "gap lemma", progress)
    summary = BatterySummary(seed=seed, dims=(lo, hi), systems=systems, gaps=gaps)
    if summary.passed:
        log.info("battery passed: %d systems, %d gap instances", len(systems), len(gaps))
    else:
        log.error("battery found %d failing case(s)", len(summary.failures))
    return summary
