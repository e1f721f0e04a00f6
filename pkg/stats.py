"""
Log-domain Poisson hypothesis test of the Gaussian-boundary null hypothesis.
"""
import math
import logging
from typing import List, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, logsumexp, xlogy

from config import (
    UPPER_LIMIT_CL, P_TRUNCATION_DECADES, BOUNDARY_GRID_POINTS, BOUNDARY_REFINE_TOL,
)
from models import PoissonPair, PValueResult, DomainError

logger = logging.getLogger(__name__)

LN10 = math.log(10.0)
TRUNCATION_MARGIN = 20.0  # nats below the 10^-60 cut, absorbs the count of dropped terms
TIE_REL_TOL = 1e-12


def zero_count_upper_limit(cl: float = UPPER_LIMIT_CL) -> float:
    """One-sided Poisson upper limit on the mean after observing zero events."""
    if not (0.0 < cl < 1.0):
        raise DomainError(f"confidence level {cl} outside (0, 1)")
    return -math.log1p(-cl)


def format_value_error(value: float, sigma: float, digits: int = 2) -> str:
    """Concise uncertainty notation, e.g. 0.173(13)."""
    if sigma is None or not math.isfinite(sigma) or sigma <= 0:
        return f"{value:g}"
    exponent = math.floor(math.log10(sigma)) - (digits - 1)
    decimals = max(0, -exponent)
    scaled = int(round(sigma / 10.0 ** exponent))
    if scaled >= 10 ** digits:  # rounding carried into a new digit
        exponent += 1
        decimals = max(0, -exponent)
        scaled = int(round(sigma / 10.0 ** exponent))
    if decimals == 0:
        return f"{round(value / 10.0 ** exponent) * 10.0 ** exponent:.0f}({scaled * 10 ** exponent})"
    return f"{value:.{decimals}f}({scaled})"


def expected_counts(g2: float, g3: float, n1: float, n_shots: float) -> PoissonPair:
    """λ₂ = g²N₁²/N_shots and λ₃ = g³N₁³/N_shots²."""
    if min(g2, g3, n1) < 0 or n_shots <= 0:
        raise DomainError(f"expected_counts needs g2, g3, n1 >= 0 and n_shots > 0, got {(g2, g3, n1, n_shots)}")
    return PoissonPair(lambda2=g2 * n1 ** 2 / n_shots, lambda3=g3 * n1 ** 3 / n_shots ** 2)


def log_poisson_pmf(n, lam: float):
    """ln Pois(n | λ), −inf for impossible outcomes."""
    n = np.asarray(n, dtype=float)
    return xlogy(n, lam) - lam - gammaln(n + 1.0)


def log_joint_prob(n2: int, n3: int, pp: PoissonPair) -> float:
    """ln Pois(n2|λ₂) + ln Pois(n3|λ₃)."""
    if n2 < 0 or n3 < 0:
        raise DomainError("counts must be non-negative")
    return float(log_poisson_pmf(n2, pp.lambda2) + log_poisson_pmf(n3, pp.lambda3))


def _pmf_window(lam: float, floor: float) -> Tuple[int, int]:
    """Integer range around the mode where ln Pois(n|λ) ≥ floor."""
    if lam == 0:
        return 0, 0
    mode = int(math.floor(lam))

    def f(n):
        return float(log_poisson_pmf(n, lam))

    if f(mode) < floor:
        return mode, mode

    if f(0) >= floor:
        lo = 0
    else:
        a, b = 0, mode  # f(a) < floor <= f(b)
        while b - a > 1:
            mid = (a + b) // 2
            if f(mid) >= floor:
                b = mid
            else:
                a = mid
        lo = b

    step = max(1, int(math.sqrt(lam)))
    a, b = mode, mode + step
    while f(b) >= floor:
        a, b = b, b + step
        step *= 2
    while b - a > 1:  # f(a) >= floor > f(b)
        mid = (a + b) // 2
        if f(mid) >= floor:
            a = mid
        else:
            b = mid
    return lo, a


def _tail_masses(f: np.ndarray, cut: np.ndarray) -> np.ndarray:
    """
    ln Σ exp(f[i]) over entries with f[i] < cut, for every cut at once.

    f is unimodal: the rising flank is searched directly, the falling flank reversed.
    """
    peak = int(np.argmax(f))
    left, right = f[:peak + 1], f[peak + 1:][::-1]
    out = np.full(cut.shape, -np.inf)
    for flank in (left, right):
        if flank.size == 0:
            continue
        keys = np.maximum.accumulate(flank)
        cumulative = np.logaddexp.accumulate(flank)
        k = np.searchsorted(keys, cut, side="left")
        mass = np.where(k > 0, cumulative[np.maximum(k - 1, 0)], -np.inf)
        out = np.logaddexp(out, mass)
    return out


def p_tilde_ln(n2_m: int, n3_m: int, pp: PoissonPair, inclusive: bool = False) -> float:
    """Natural log of Σ P(n2, n3) over outcomes less probable than the observation."""
    observed = log_joint_prob(n2_m, n3_m, pp)
    if observed == -np.inf:
        return -np.inf
    tol = TIE_REL_TOL * max(1.0, abs(observed))
    floor = observed - P_TRUNCATION_DECADES * LN10 - TRUNCATION_MARGIN

    lo2, hi2 = _pmf_window(pp.lambda2, floor)
    lo3, hi3 = _pmf_window(pp.lambda3, floor)
    f2 = log_poisson_pmf(np.arange(lo2, hi2 + 1), pp.lambda2)
    f3 = log_poisson_pmf(np.arange(lo3, hi3 + 1), pp.lambda3)

    cut = observed - f3 + (tol if inclusive else -tol)
    terms = f3 + _tail_masses(f2, cut)
    if not np.any(np.isfinite(terms)):
        return -np.inf
    return float(min(logsumexp(terms), 0.0))


def p_tilde(n2_m: int, n3_m: int, pp: PoissonPair, inclusive: bool = False) -> float:
    """
    log₁₀ of the cumulative probability of outcomes less probable than (n2_m, n3_m).

    Terms more than 10⁻⁶⁰ below the observation's probability are dropped.
    With inclusive=True, outcomes exactly as probable as the observation count too.
    """
    return p_tilde_ln(n2_m, n3_m, pp, inclusive) / LN10


def _boundary_point(root_g2: float) -> Tuple[float, float]:
    return root_g2 ** 2, (2.0 - 3.0 * root_g2) ** 2


def normalizations(n1: float, n_shots: float) -> Tuple[float, float]:
    """Accidental-coincidence scales N₁²/N_shots and N₁³/N_shots² that multiply g² and g³."""
    if n1 < 0 or n_shots <= 0:
        raise DomainError(f"normalizations need n1 >= 0 and n_shots > 0, got {(n1, n_shots)}")
    return n1 ** 2 / n_shots, n1 ** 3 / n_shots ** 2


def _boundary_log10_p(root_g2: float, n2_m: int, n3_m: int, norm2: float, norm3: float,
                      inclusive: bool) -> float:
    g2, g3 = _boundary_point(root_g2)
    return p_tilde(n2_m, n3_m, PoissonPair(lambda2=g2 * norm2, lambda3=g3 * norm3), inclusive)


def boundary_scan_normalized(n2_m: int, n3_m: int, norm2: float, norm3: float,
                             grid_points: int = BOUNDARY_GRID_POINTS, inclusive: bool = False,
                             n_jobs: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """log₁₀ p̃ on an even grid in √g² ∈ [0, 2/3] along g³ = (2 - 3√g²)², with λ₂ = g²·norm2, λ₃ = g³·norm3."""
    roots = np.linspace(0.0, 2.0 / 3.0, grid_points)
    if n_jobs == 1:
        values = [_boundary_log10_p(s, n2_m, n3_m, norm2, norm3, inclusive) for s in roots]
    else:
        values = Parallel(n_jobs=n_jobs)(
            delayed(_boundary_log10_p)(s, n2_m, n3_m, norm2, norm3, inclusive) for s in roots
        )
    return roots, np.asarray(values, dtype=float)


def boundary_scan(n2_m: int, n3_m: int, n1: float, n_shots: float,
                  grid_points: int = BOUNDARY_GRID_POINTS, inclusive: bool = False,
                  n_jobs: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """boundary_scan_normalized for a single-detector-equivalent N₁ and N_shots."""
    norm2, norm3 = normalizations(n1, n_shots)
    return boundary_scan_normalized(n2_m, n3_m, norm2, norm3, grid_points, inclusive, n_jobs)


def max_p_normalized(n2_m: int, n3_m: int, norm2: float, norm3: float,
                     grid_points: int = BOUNDARY_GRID_POINTS, inclusive: bool = False,
                     n_jobs: int = 1) -> PValueResult:
    """Largest p̃ over the Gaussian boundary: coarse grid, then bounded refinement around the best cell."""
    if n2_m < 0 or n3_m < 0:
        raise DomainError("counts must be non-negative")
    if norm2 < 0 or norm3 < 0:
        raise DomainError("normalizations must be non-negative")
    roots, values = boundary_scan_normalized(n2_m, n3_m, norm2, norm3, grid_points, inclusive, n_jobs)
    best = int(np.argmax(values))
    best_root, best_value = float(roots[best]), float(values[best])

    lo = float(roots[max(best - 1, 0)])
    hi = float(roots[min(best + 1, roots.size - 1)])
    if np.isfinite(best_value) and hi > lo:
        xatol = BOUNDARY_REFINE_TOL / max(2.0 * hi, 1e-3)  # Δg² = 2√g²·Δ√g²
        refined = minimize_scalar(
            lambda s: -_boundary_log10_p(s, n2_m, n3_m, norm2, norm3, inclusive),
            bounds=(lo, hi), method="bounded", options={"xatol": xatol},
        )
        if refined.success and -refined.fun > best_value:
            best_root, best_value = float(refined.x), float(-refined.fun)
    elif not np.isfinite(best_value):
        logger.warning(f"Observation ({n2_m}, {n3_m}) is impossible at every boundary point")

    g2, g3 = _boundary_point(best_root)
    logger.info(f"Boundary maximum log10 p = {best_value:.2f} at g2={g2:.6g}, g3={g3:.6g}")
    return PValueResult(
        log10_p=min(best_value, 0.0), argmax_g2=g2, argmax_g3=g3,
        lambda2=g2 * norm2, lambda3=g3 * norm3,
    )


def max_p_over_boundary(n2_m: int, n3_m: int, n1: float, n_shots: float,
                        grid_points: int = BOUNDARY_GRID_POINTS, inclusive: bool = False,
                        n_jobs: int = 1) -> PValueResult:
    """
    Largest p-value of the Gaussian hypothesis along the boundary curve, with
    λ₂ = g²N₁²/N_shots and λ₃ = g³N₁³/N_shots².
    """
    if n1 < 0 or n_shots <= 0:
        raise DomainError(f"max_p_over_boundary needs n1 >= 0 and n_shots > 0, got {(n1, n_shots)}")
    norm2, norm3 = normalizations(n1, n_shots)
    return max_p_normalized(n2_m, n3_m, norm2, norm3, grid_points, inclusive, n_jobs)


def calibration_trials(root_g2: float, n1: float, n_shots: float, trials: int = 100,
                       seed: int = 0, grid_points: int = 50) -> List[float]:
    """log₁₀ p of Poisson counts drawn at one boundary point (null hypothesis true)."""
    rng = np.random.default_rng(seed)
    g2, g3 = _boundary_point(root_g2)
    pp = expected_counts(g2, g3, n1, n_shots)
    results = []
    for _ in range(trials):
        n2 = int(rng.poisson(pp.lambda2))
        n3 = int(rng.poisson(pp.lambda3))
        results.append(max_p_over_boundary(n2, n3, n1, n_shots, grid_points=grid_points).log10_p)
    return results
