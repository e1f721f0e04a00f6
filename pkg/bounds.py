"""
Boundary curves, tangent-line bounds and the two non-Gaussianity criteria.
"""
import math
import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from config import ABS_TOL, QUARTIC_RESIDUAL_TOL, CRITERION_THRESHOLD, CERTIFIED_G2_LIMIT
from models import CorrelationPoint, TangentLine, Verdict, DomainError

logger = logging.getLogger(__name__)

# The four tangent lines g³ + χ₂·g² < χ₁ listed with the criterion.
LINEAR_BOUNDS: List[Tuple[str, float, float]] = [
    ("g3+g2<2/5", 1.0, 0.4),
    ("g3+3g2<1", 3.0, 1.0),
    ("g3+9g2<2", 9.0, 2.0),
    ("g3+28g2<3", 28.0, 3.0),
]

_CBRT_18 = 18.0 ** (1.0 / 3.0)
_CBRT_2_3 = (2.0 / 3.0) ** (1.0 / 3.0)


def lower_boundary_g3(g2: float) -> float:
    """(2 - 3√g²)²; the pure-state lower bound on g³ for g² ≤ 4/9."""
    if g2 < 0:
        raise DomainError(f"g2 must be non-negative, got {g2}")
    return (2.0 - 3.0 * math.sqrt(g2)) ** 2


def upper_boundary_g3(g2: float) -> float:
    """(2 + 3√g²)²."""
    if g2 < 0:
        raise DomainError(f"g2 must be non-negative, got {g2}")
    return (2.0 + 3.0 * math.sqrt(g2)) ** 2


def boundary_curve(g2_values) -> Tuple[np.ndarray, np.ndarray]:
    """Lower and upper boundary curves on an array of g² values."""
    g2 = np.asarray(g2_values, dtype=float)
    if np.any(g2 < 0):
        raise DomainError("g2 values must be non-negative")
    root = np.sqrt(g2)
    return (2.0 - 3.0 * root) ** 2, (2.0 + 3.0 * root) ** 2


def criterion_sigma(c: CorrelationPoint) -> Optional[float]:
    """
    First-order error of √g³ + 3√g².

    A zero estimate (or a flagged upper limit) contributes the square root of its
    upper limit instead of the divergent derivative term.
    """
    if c.g2_sigma is None and c.g3_sigma is None:
        return None
    var = 0.0
    if c.g2_sigma is not None:
        if c.g2 > 0:
            var += (3.0 * c.g2_sigma / (2.0 * math.sqrt(c.g2))) ** 2
        else:
            var += 9.0 * c.g2_sigma
    if c.g3_sigma is not None:
        if c.g3_is_upper_limit or c.g3 == 0:
            var += c.g3_sigma
        else:
            var += (c.g3_sigma / (2.0 * math.sqrt(c.g3))) ** 2
    return math.sqrt(var)


def criterion(c: CorrelationPoint) -> Verdict:
    """Evaluate √g³ + 3√g² < 2 with σ-distance, tangent lines and the joint cumulant."""
    value = math.sqrt(c.g3) + 3.0 * math.sqrt(c.g2)
    sigma = criterion_sigma(c)
    distance = (CRITERION_THRESHOLD - value) / sigma if sigma else None
    return Verdict(
        criterion_value=value,
        non_gaussian=value < CRITERION_THRESHOLD,
        sigma_distance=distance,
        criterion_sigma=sigma,
        in_certified_region=c.g2 < CERTIFIED_G2_LIMIT,
        linear_bounds=dict(linear_bounds_check(c)),
        joint_cumulant=joint_cumulant_g3(c),
    )


def pure_state_polynomial(alpha: float, r: float) -> float:
    """Squared pure-state inequality divided by 4·sinh⁴(r); non-negative for every state."""
    if r <= 0:
        raise DomainError("pure_state_polynomial divides by sinh^4(r); r must be positive")
    a2 = alpha * alpha
    a4, a6 = a2 * a2, a2 * a2 * a2
    c, s = math.cosh(r), math.sinh(r)
    return (36 * a6 * c ** 2 - 36 * a6 * c * s + 12 * a6 * s ** 2
            + 54 * a4 * c ** 2 * s ** 2 - 48 * a4 * c * s ** 3 + 21 * a4 * s ** 4
            + 36 * a2 * c ** 2 * s ** 4 - 18 * a2 * c * s ** 5 + 12 * a2 * s ** 6
            + 9 * c ** 2 * s ** 6 + 2 * s ** 8)


def tangent_at(g2: float) -> TangentLine:
    """Tangent g³ = χ₁ - χ₂·g² to the lower boundary at g² ∈ (0, 4/9]."""
    if not (0.0 < g2 <= CERTIFIED_G2_LIMIT + ABS_TOL):
        raise DomainError(f"tangent point g2={g2} outside (0, 4/9]")
    root = math.sqrt(min(g2, CERTIFIED_G2_LIMIT))
    slope = -3.0 * (2.0 - 3.0 * root) / root
    chi1 = 4.0 - 6.0 * root
    return TangentLine(chi1=max(chi1, 0.0), chi2=-slope + 0.0, touch_g2=g2)


def tangent_from_slope(chi2: float) -> TangentLine:
    """Tangent line with a given χ₂ ≥ 0 (slope k = -χ₂)."""
    if chi2 < 0:
        raise DomainError("tangent lines of the lower boundary have chi2 >= 0")
    root = 6.0 / (9.0 + chi2)
    return tangent_at(root * root)


def linear_bounds_check(c: CorrelationPoint) -> List[Tuple[str, bool]]:
    """Check the fixed tangent-line bounds; any True certifies non-Gaussianity."""
    return [(bound_id, c.g3 + chi2 * c.g2 < chi1) for bound_id, chi2, chi1 in LINEAR_BOUNDS]


def joint_cumulant_g3(c: CorrelationPoint) -> float:
    """Connected part g³ - 3g² + 2; negative values certify pure states only."""
    return c.g3 - 3.0 * c.g2 + 2.0


def _quartic(x: float, p: float) -> float:
    return 1.0 + x ** 4 - p * x


def _quartic_radical(n: float) -> float:
    p = 4.0 * n + 2.0
    c = (math.sqrt(3.0) * math.sqrt(27.0 * p ** 4 - 256.0) + 9.0 * p * p) ** (1.0 / 3.0)
    s = c / _CBRT_18 + 4.0 * _CBRT_2_3 / c
    root_s = math.sqrt(s)
    return 0.5 * root_s + 0.5 * math.sqrt((8.0 * n + 4.0) / root_s - s)


def quartic_x(n: float) -> float:
    """
    Root x ≥ 1 of 1 + x⁴ - (4n+2)x = 0, with x = e^{2r} at the constrained G⁽²⁾ minimum.

    The radical form is polished by Newton steps; if it still misses the residual
    tolerance the root is bracketed on [1, (4n+3)^{1/3} + 1].
    """
    if n < 0:
        raise DomainError(f"mean photon number must be non-negative, got {n}")
    if n == 0:
        return 1.0
    p = 4.0 * n + 2.0
    try:
        x = _quartic_radical(n)
        for _ in range(4):
            step = _quartic(x, p) / (4.0 * x ** 3 - p)
            x -= step
            if abs(step) <= 1e-16 * x:
                break
    except (ValueError, ZeroDivisionError):
        x = float("nan")

    if not (math.isfinite(x) and x >= 1.0 and abs(_quartic(x, p)) < QUARTIC_RESIDUAL_TOL):
        logger.warning(f"Radical quartic solution lost precision at n={n}, using bracketed root")
        x = brentq(_quartic, 1.0, (4.0 * n + 3.0) ** (1.0 / 3.0) + 1.0, args=(p,), xtol=1e-15, rtol=4e-16)
    return x


def g2u_min_gaussian(n: float) -> float:
    """Smallest ⟨a†a†aa⟩ of a Gaussian pure state with ⟨a†a⟩ = n."""
    x = quartic_x(n)
    value = (x ** 4 + x ** 2 * (8.0 * n * n - 8.0 * n - 4.0) + x * (8.0 * n + 4.0) - 1.0) / (8.0 * x * x)
    return max(value, 0.0)


def g2_min(n: float) -> float:
    """Mean-photon-number dependent threshold g²_min(n) = G²_min(n)/n²."""
    if n <= 0:
        raise DomainError("g2_min is defined for n > 0")
    return g2u_min_gaussian(n) / (n * n)


def lagrange_minimizer(n: float) -> Tuple[float, float]:
    """(α², r) of the Gaussian pure state attaining G²_min at ⟨a†a⟩ = n."""
    r = 0.5 * math.log(quartic_x(n))
    return n - math.sinh(r) ** 2, r


def mean_photon_criterion(n: float, g2: float) -> bool:
    """True (non-Gaussian) iff g² lies below g²_min(n)."""
    if n <= 0:
        raise DomainError(f"mean photon number must be positive, got {n}")
    return g2 < g2_min(n)
