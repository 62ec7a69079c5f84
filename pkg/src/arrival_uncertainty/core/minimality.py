"""Airy kernel, relation constants, the two minimal laws and the L1 near-minimality fit.

Public surface:
  * airy(x) -> AiryEval, with airy_series / airy_asymptotic as independent references
  * airy_negative_zeros(n), airy_prime_negative_zeros(n)
  * constants() -> Constants (C, gamma_airy, gamma_gauss, x0, y0, y1)
  * minimal_density / minimal_cdf for kind "gaussian" or "airy"
  * fit_minimal(P, kind, target) -> MinimalFit
  * theorem_fit_parameters(kind, stats), ground_state_bounds(stats)

The certificate: if a relation holds with excess ``epsilon`` then the arrival
density lies within ``gamma * sqrt(epsilon)`` (L1) of a scaled, shifted member
of the matching minimal family.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import special
from scipy.integrate import quad
from scipy.optimize import brentq, minimize
from scipy.stats import norm

from arrival_uncertainty.core.errors import NonpositiveParameter, NonpositiveScale, OptimizerFailed, RangeExceeded
from arrival_uncertainty.utils.logger import get_logger

__all__ = [
    "KINDS",
    "AiryEval",
    "Constants",
    "FitTarget",
    "GroundStateBounds",
    "MinimalFit",
    "airy",
    "airy_series",
    "airy_asymptotic",
    "airy_negative_zeros",
    "airy_prime_negative_zeros",
    "constants",
    "airy_law_moments",
    "minimal_density",
    "minimal_cdf",
    "gamma_for",
    "theorem_fit_parameters",
    "ground_state_bounds",
    "fit_minimal",
    "l1_distance",
]

log = get_logger(__name__)

KINDS = ("gaussian", "airy")
AIRY_RANGE = 50.0
MAX_ZEROS = 20
NEWTON_TOL = 1e-15
ZERO_RESIDUAL = 1e-10
CERTIFICATE_SLACK = 1e-6
GL_ORDER = 12
CORE_PANELS = 240
TAIL_PANELS = 40
TAU_BOX = 10.0

_AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * special.gamma(2.0 / 3.0))
_AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * special.gamma(1.0 / 3.0))


@dataclass(frozen=True)
class AiryEval:
    ai: float
    ai_prime: float


def airy(x: float) -> AiryEval:
    """Ai(x) and Ai'(x) for ``|x| <= 50``.

    Evaluation is delegated to the AMOS routines behind ``scipy.special.airy``;
    :func:`airy_series` and :func:`airy_asymptotic` reproduce it in their
    respective regions.
    """
    if not np.isfinite(x) or abs(x) > AIRY_RANGE:
        raise RangeExceeded(f"|x| must be <= {AIRY_RANGE:g} for Airy evaluation, got {x}")
    ai, aip, _bi, _bip = special.airy(float(x))
    return AiryEval(ai=float(ai), ai_prime=float(aip))


def airy_series(x: float, max_terms: int = 400) -> AiryEval:
    """Maclaurin expansion ``Ai = Ai(0) f(x) + Ai'(0) g(x)`` summed to roundoff."""
    x = float(x)
    x3 = x**3
    f, g, gp = 1.0, x, 1.0
    tf, tg = 1.0, x  # terms of f and g
    tfp, tgp = x * x / 2.0, 1.0  # terms of f' (from k=1) and g'
    fp = tfp
    for k in range(max_terms):
        tf *= x3 / ((3 * k + 2) * (3 * k + 3))
        tg *= x3 / ((3 * k + 3) * (3 * k + 4))
        tgp *= x3 / ((3 * k + 1) * (3 * k + 3))
        if k >= 1:
            tfp *= x3 / (3 * k * (3 * k + 2))
            fp += tfp
        f += tf
        g += tg
        gp += tgp
        if max(abs(tf), abs(tg), abs(tfp), abs(tgp)) <= 1e-18 * max(abs(f), abs(g), 1e-300):
            break
    return AiryEval(ai=_AI0 * f + _AIP0 * g, ai_prime=_AI0 * fp + _AIP0 * gp)


def _asymptotic_coefficients(count: int) -> Tuple[np.ndarray, np.ndarray]:
    u = np.ones(count)
    for k in range(1, count):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
    v = np.array([-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(count)])
    return u, v


def _truncated(coeffs: np.ndarray, zeta: float, alternate: bool, start: int = 0, step: int = 1) -> float:
    total, previous = 0.0, np.inf
    sign = 1.0
    for index, k in enumerate(range(start, coeffs.size, step)):
        term = coeffs[k] / zeta**k
        if abs(term) > previous:
            break
        total += (sign if alternate else 1.0) * term
        previous = abs(term)
        sign = -sign
        if index and abs(term) < 1e-17 * abs(total):
            break
    return total


def airy_asymptotic(x: float, terms: int = 30) -> AiryEval:
    """Large-|x| asymptotic expansions, truncated at the smallest term. Requires ``|x| >= 2``."""
    if abs(x) < 2.0:
        raise RangeExceeded(f"asymptotic Airy expansion needs |x| >= 2, got {x}")
    u, v = _asymptotic_coefficients(terms)
    if x > 0:
        zeta = 2.0 / 3.0 * x**1.5
        pref = np.exp(-zeta) / (2.0 * np.sqrt(np.pi))
        return AiryEval(
            ai=pref * x**-0.25 * _truncated(u, zeta, alternate=True),
            ai_prime=-pref * x**0.25 * _truncated(v, zeta, alternate=True),
        )
    z = -x
    zeta = 2.0 / 3.0 * z**1.5
    phase = zeta - np.pi / 4.0
    even_u = _truncated(u, zeta, alternate=True, start=0, step=2)
    odd_u = _truncated(u, zeta, alternate=True, start=1, step=2)
    even_v = _truncated(v, zeta, alternate=True, start=0, step=2)
    odd_v = _truncated(v, zeta, alternate=True, start=1, step=2)
    ai = (np.cos(phase) * even_u + np.sin(phase) * odd_u) / (np.sqrt(np.pi) * z**0.25)
    aip = z**0.25 * (np.sin(phase) * even_v - np.cos(phase) * odd_v) / np.sqrt(np.pi)
    return AiryEval(ai=float(ai), ai_prime=float(aip))


def _check_count(n: int) -> None:
    if n < 1:
        raise NonpositiveParameter(f"number of zeros must be >= 1, got {n}")
    if n > MAX_ZEROS:
        raise RangeExceeded(f"at most {MAX_ZEROS} zeros are supported, got {n}")


def _newton(x: float, step: Callable[[float], float]) -> float:
    for _ in range(60):
        dx = step(x)
        x -= dx
        if abs(dx) <= NEWTON_TOL * max(1.0, abs(x)):
            break
    return x


def airy_negative_zeros(n: int) -> List[float]:
    """First ``n`` zeros of Ai, Newton-refined from their asymptotic expansion."""
    _check_count(n)
    zeros = []
    for k in range(1, n + 1):
        t = 3.0 * np.pi * (4 * k - 1) / 8.0
        guess = -(t ** (2.0 / 3.0)) * (1.0 + 5.0 / 48.0 * t**-2 - 5.0 / 36.0 * t**-4)

        def step(x: float) -> float:
            a = airy(x)
            return a.ai / a.ai_prime

        z = _newton(guess, step)
        residual = abs(airy(z).ai)
        if residual > ZERO_RESIDUAL:  # pragma: no cover (Newton converges from these guesses)
            log.error("Airy zero %d residual %.2e exceeds %.0e", k, residual, ZERO_RESIDUAL)
        zeros.append(z)
    return zeros


def airy_prime_negative_zeros(n: int) -> List[float]:
    """First ``n`` zeros of Ai' (they interlace with those of Ai)."""
    _check_count(n)
    zeros = []
    for k in range(1, n + 1):
        t = 3.0 * np.pi * (4 * k - 3) / 8.0
        guess = -(t ** (2.0 / 3.0)) * (1.0 - 7.0 / 48.0 * t**-2 + 35.0 / 288.0 * t**-4)

        def step(x: float) -> float:
            a = airy(x)
            return a.ai_prime / (x * a.ai)

        zeros.append(_newton(guess, step))
    return zeros


@dataclass(frozen=True)
class Constants:
    """Constants of both relations and their stability estimates.

    ``C = 2 (y0/3)^(3/2)`` bounds ``<T> Delta E``; ``x0`` and ``y0`` are the
    ground energies of the oscillator and the wall-linear problem; the gammas
    turn a relative excess into an L1 radius.
    """

    C: float
    gamma_airy: float
    gamma_gauss: float
    x0: float
    x1: float
    y0: float
    y1: float
    ai_prime_z1: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@lru_cache(maxsize=1)
def constants() -> Constants:
    z1, z2 = airy_negative_zeros(2)
    y0, y1 = -z1, -z2
    aip = airy(z1).ai_prime
    mass, _err = quad(lambda s: special.airy(s + z1)[0] ** 2, 0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    if abs(mass - aip**2) > 1e-9 * aip**2:  # pragma: no cover (normalization identity)
        log.error("Airy normalization check failed: int Ai^2 = %.12g, Ai'(Z1)^2 = %.12g", mass, aip**2)
    return Constants(
        C=2.0 * (y0 / 3.0) ** 1.5,
        gamma_airy=2.0 * np.sqrt(2.0 * y0 / (3.0 * (y1 - y0))),
        gamma_gauss=float(np.sqrt(2.0)),
        x0=1.0,
        x1=3.0,
        y0=y0,
        y1=y1,
        ai_prime_z1=aip,
    )


def _check_kind(kind: str) -> str:
    key = kind.strip().lower()
    if key not in KINDS:
        raise ValueError(f"Unknown minimal family '{kind}'. Valid: {', '.join(KINDS)}")
    return key


def _airy_law(s: np.ndarray) -> np.ndarray:
    c = constants()
    x = s - c.y0
    ai = special.airy(np.where(s >= 0, x, 0.0))[0]
    return np.where(s >= 0, ai**2 / c.ai_prime_z1**2, 0.0)


def _airy_law_cdf(s: np.ndarray) -> np.ndarray:
    c = constants()
    x = np.where(s >= 0, s - c.y0, -c.y0)
    ai, aip, _bi, _bip = special.airy(x)
    values = (x * ai**2 - aip**2 + c.ai_prime_z1**2) / c.ai_prime_z1**2
    return np.where(s >= 0, np.clip(values, 0.0, 1.0), 0.0)


@lru_cache(maxsize=1)
def airy_law_moments() -> Tuple[float, float]:
    """Mean and standard deviation of the unit-scale Airy law (mean is ``2 y0 / 3``)."""
    mean, _ = quad(lambda s: s * float(_airy_law(np.array(s))), 0.0, np.inf, epsabs=1e-14, limit=200)
    second, _ = quad(lambda s: s * s * float(_airy_law(np.array(s))), 0.0, np.inf, epsabs=1e-14, limit=200)
    return mean, float(np.sqrt(second - mean**2))


def minimal_density(kind: str, lam: float, tau: float, t: Any) -> Any:
    """``lam * g(lam (t - tau))`` for the standard normal or the squared-Airy law."""
    key = _check_kind(kind)
    if not lam > 0:
        raise NonpositiveScale(f"scale lambda must be > 0, got {lam}")
    s = lam * (np.asarray(t, dtype=float) - tau)
    values = lam * (norm.pdf(s) if key == "gaussian" else _airy_law(s))
    return values if values.ndim else float(values)


def minimal_cdf(kind: str, lam: float, tau: float, t: Any) -> Any:
    key = _check_kind(kind)
    if not lam > 0:
        raise NonpositiveScale(f"scale lambda must be > 0, got {lam}")
    s = lam * (np.asarray(t, dtype=float) - tau)
    values = norm.cdf(s) if key == "gaussian" else _airy_law_cdf(s)
    return values if np.ndim(values) else float(values)


def gamma_for(kind: str) -> float:
    c = constants()
    return c.gamma_gauss if _check_kind(kind) == "gaussian" else c.gamma_airy


@dataclass(frozen=True)
class GroundStateBounds:
    """Expectations of the oscillator (X) and wall-linear (Y) operators at the minimizing scale."""

    x_expectation: float
    y_expectation: float
    x0: float
    y0: float

    @property
    def holds(self) -> bool:
        return self.x_expectation >= self.x0 - 1e-9 and self.y_expectation >= self.y0 * (1.0 - 1e-9)


def ground_state_bounds(stats: Any) -> GroundStateBounds:
    """``2 DeltaT DeltaH^ / hbar >= x0`` and ``3 (<T> DeltaH^ / (2 hbar))^(2/3) >= y0``.

    ``stats`` is an :class:`~arrival_uncertainty.core.arrival.ArrivalStats`.
    """
    c = constants()
    spread = stats.std_E_dilated / stats.hbar
    return GroundStateBounds(
        x_expectation=2.0 * stats.std_T * spread,
        y_expectation=3.0 * (stats.mean_T * spread / 2.0) ** (2.0 / 3.0),
        x0=c.x0,
        y0=c.y0,
    )


def theorem_fit_parameters(kind: str, stats: Any) -> Optional[Tuple[float, float]]:
    """``(lambda, tau)`` of the ground state selected by the minimizing scale choice.

    Gaussian: centered at ``<T>`` with variance ``hbar DeltaT / (2 DeltaH^)``.
    Airy: wall at 0 and scale ``eta = (<T> hbar^2 / (2 DeltaH^2))^(1/3)``.
    Returns None when the dilated energy spread vanishes.
    """
    key = _check_kind(kind)
    spread = stats.std_E_dilated
    if not spread > 0 or not stats.mean_T > 0:
        return None
    if key == "gaussian":
        sigma = np.sqrt(stats.hbar * stats.std_T / (2.0 * spread))
        return float(1.0 / sigma), float(stats.mean_T)
    eta = (stats.mean_T * stats.hbar**2 / (2.0 * spread**2)) ** (1.0 / 3.0)
    return float(1.0 / eta), 0.0


@dataclass(frozen=True)
class FitTarget:
    """What the fit needs to know about the density it approximates."""

    mean_T: float
    std_T: float
    horizon: float
    epsilon: Optional[float] = None
    theorem_start: Optional[Tuple[float, float]] = None

    @classmethod
    def from_stats(cls, kind: str, stats: Any) -> "FitTarget":
        key = _check_kind(kind)
        return cls(
            mean_T=stats.mean_T,
            std_T=stats.std_T,
            horizon=max(stats.horizon, stats.mean_T + 40.0 * stats.std_T),
            epsilon=stats.epsilon_var if key == "gaussian" else stats.epsilon_mean,
            theorem_start=theorem_fit_parameters(key, stats),
        )


@dataclass(frozen=True)
class MinimalFit:
    kind: str
    scale: float
    shift: float
    distance: float
    epsilon: Optional[float]
    bound: Optional[float]
    boundary_hit: bool = False
    starts_converged: int = 0

    @property
    def trivial(self) -> bool:
        """Any two densities are within L1 distance 2, so such a bound certifies nothing."""
        return self.bound is not None and self.bound >= 2.0

    @property
    def satisfied(self) -> Optional[bool]:
        if self.bound is None:
            return None
        return self.distance <= self.bound + CERTIFICATE_SLACK

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["trivial"] = self.trivial
        data["satisfied"] = self.satisfied
        return data


def _panel_edges(target: FitTarget) -> np.ndarray:
    core_end = min(target.horizon, target.mean_T + 12.0 * target.std_T)
    core = np.linspace(0.0, core_end, CORE_PANELS + 1)
    if target.horizon <= core_end * (1.0 + 1e-12):
        return core
    tail = np.geomspace(core_end, target.horizon, TAIL_PANELS + 1)
    return np.concatenate([core, tail[1:]])


class _L1Objective:
    """``int_0^T |P - f| + (1 - int_0^T f)`` on fixed Gauss-Legendre panels, P tabulated once."""

    def __init__(self, density: Callable[[Any], Any], kind: str, target: FitTarget) -> None:
        self.kind = kind
        self.horizon = target.horizon
        nodes, weights = np.polynomial.legendre.leggauss(GL_ORDER)
        edges = _panel_edges(target)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        self.t = (mid[:, None] + half[:, None] * nodes[None, :]).reshape(-1)
        self.w = (half[:, None] * weights[None, :]).reshape(-1)
        self.P = np.asarray(density(self.t), dtype=float)

    def value(self, lam: float, tau: float) -> float:
        f = minimal_density(self.kind, lam, tau, self.t)
        inside = minimal_cdf(self.kind, lam, tau, self.horizon) - minimal_cdf(self.kind, lam, tau, 0.0)
        return float(np.sum(self.w * np.abs(self.P - f)) + (1.0 - inside))

    def __call__(self, x: np.ndarray) -> float:
        return self.value(float(np.exp(x[0])), float(x[1]))


def l1_distance(density: Callable[[Any], Any], kind: str, lam: float, tau: float, horizon: float) -> float:
    """``int |P - lam g(lam (t - tau))| dt`` with the integration split at every sign change."""
    grid = np.unique(np.concatenate([np.linspace(0.0, horizon, 2001), np.geomspace(horizon * 1e-6, horizon, 2001)]))
    fit = minimal_density(kind, lam, tau, grid)

    def diff(t: float) -> float:
        return float(density(t)) - float(minimal_density(kind, lam, tau, t))

    gap = np.asarray(density(grid), dtype=float) - fit
    breaks = {0.0, horizon}
    if 0.0 < tau < horizon:
        breaks.add(tau)
    for i in np.nonzero(np.sign(gap[:-1]) * np.sign(gap[1:]) < 0)[0]:
        breaks.add(brentq(diff, grid[i], grid[i + 1], xtol=1e-14))
    points = sorted(breaks)
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        value, _err = quad(lambda t: abs(diff(t)), a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
        total += value
    inside = minimal_cdf(kind, lam, tau, horizon) - minimal_cdf(kind, lam, tau, 0.0)
    return total + (1.0 - inside)


def _starts(kind: str, target: FitTarget, restarts: int, box: Tuple[float, float]) -> List[Tuple[float, float]]:
    if kind == "gaussian":
        lam0, tau0 = 1.0 / target.std_T, target.mean_T
    else:
        mean_a, std_a = airy_law_moments()
        lam0 = std_a / target.std_T
        tau0 = target.mean_T - mean_a / lam0
    starts = [(lam0, tau0)]
    if target.theorem_start is not None:
        starts.append(target.theorem_start)
    perturbed = [
        (lam0 * 1.3, tau0),
        (lam0 / 1.3, tau0),
        (lam0, tau0 + 0.5 * target.std_T),
        (lam0, tau0 - 0.5 * target.std_T),
        (lam0 * 1.6, tau0 + 0.25 * target.std_T),
    ]
    starts.extend(perturbed[: max(0, restarts - len(starts))])
    return [(lam, float(np.clip(tau, *box))) for lam, tau in starts]


def fit_minimal(
    density: Callable[[Any], Any],
    kind: str,
    target: FitTarget,
    restarts: int = 5,
    jobs: int = 1,
) -> MinimalFit:
    """Minimize the L1 distance between ``density`` and the ``kind`` family over ``(lambda, tau)``.

    Nelder-Mead runs over ``(log lambda, tau)`` from moment-matched and
    theorem-derived starts, with ``tau`` confined to
    ``[-10 DeltaT, <T> + 10 DeltaT]``. Ties go to the lower distance, then the
    lower ``lambda``.

    Raises
    ------
    OptimizerFailed
        If no restart converges.
    """
    key = _check_kind(kind)
    if not target.std_T > 0:
        raise NonpositiveScale(f"arrival-time spread must be > 0 to fit, got {target.std_T}")
    objective = _L1Objective(density, key, target)
    box = (-TAU_BOX * target.std_T, target.mean_T + TAU_BOX * target.std_T)

    def run(start: Tuple[float, float]) -> Any:
        return minimize(
            objective,
            np.array([np.log(start[0]), start[1]]),
            method="Nelder-Mead",
            bounds=[(None, None), box],
            options={"xatol": 1e-9, "fatol": 1e-11, "maxiter": 4000, "maxfev": 8000},
        )

    starts = _starts(key, target, restarts, box)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(s) for s in starts]
    converged = [r for r in results if r.success and np.isfinite(r.fun)]
    if not converged:
        raise OptimizerFailed(f"none of {len(starts)} Nelder-Mead restarts converged for the {key} fit")
    best = min(converged, key=lambda r: (round(float(r.fun), 12), float(np.exp(r.x[0]))))
    lam, tau = float(np.exp(best.x[0])), float(best.x[1])
    span = max(1.0, abs(box[1] - box[0]))
    boundary_hit = min(abs(tau - box[0]), abs(tau - box[1])) <= 1e-9 * span
    if boundary_hit:
        log.warning("%s fit shift tau=%.6g sits on the search box edge %s", key, tau, box)
    distance = l1_distance(density, key, lam, tau, target.horizon)
    epsilon = target.epsilon
    bound = gamma_for(key) * float(np.sqrt(max(epsilon, 0.0))) if epsilon is not None else None
    fit = MinimalFit(
        kind=key,
        scale=lam,
        shift=tau,
        distance=distance,
        epsilon=epsilon,
        bound=bound,
        boundary_hit=bool(boundary_hit),
        starts_converged=len(converged),
    )
    if fit.satisfied is False:
        log.error("%s near-minimality certificate violated: distance %.6g > bound %.6g", key, distance, bound)
    log.debug("%s fit: lambda=%.8g tau=%.8g distance=%.3e", key, lam, tau, distance)
    return fit
