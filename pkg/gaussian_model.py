"""
Closed-form moments and correlation functions of displaced squeezed states and their mixtures.
"""
import math
from typing import List, Sequence, Tuple

import numpy as np

from models import (
    GaussianParams, MomentTriple, CorrelationPoint, MixtureSpec,
    ZeroIntensity, DomainError,
)


def coherent(alpha: float) -> GaussianParams:
    """Coherent state |α⟩ with real α ≥ 0."""
    return GaussianParams(alpha_mag=alpha)


def vacuum() -> GaussianParams:
    """Vacuum state."""
    return GaussianParams()


def squeezed_vacuum(r: float, theta: float = 0.0) -> GaussianParams:
    """Squeezed vacuum S(r·e^{iθ})|0⟩."""
    return GaussianParams(r=r, theta=theta)


def first_order_expectations(p: GaussianParams) -> Tuple[complex, complex, float]:
    """Return (⟨a⟩, ⟨aa⟩, ⟨a†a⟩) of the state."""
    alpha = p.alpha_mag  # φ = 0 after canonicalization
    ch, sh = math.cosh(p.r), math.sinh(p.r)
    phase = complex(math.cos(p.theta), math.sin(p.theta))
    mean_a = complex(alpha, 0.0)
    mean_aa = alpha * alpha - phase * ch * sh
    mean_n = alpha * alpha + sh * sh
    return mean_a, mean_aa, mean_n


def wick_moments(alpha, r, theta):
    """
    G⁽¹⁾, G⁽²⁾, G⁽³⁾ from the Wick expansion in first- and second-order expectations.

    Accepts scalars or broadcastable numpy arrays (used by the parameter scans).
    Round-off negatives of order 1e-16·α⁶ are clipped to zero.
    """
    alpha = np.asarray(alpha, dtype=float)
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    ch, sh = np.cosh(r), np.sinh(r)
    a2 = alpha * alpha
    aa = a2 - np.exp(1j * theta) * ch * sh
    aa_abs2 = aa.real ** 2 + aa.imag ** 2
    n = a2 + sh * sh
    g2u = 2.0 * n ** 2 + aa_abs2 - 2.0 * a2 ** 2
    g3u = (6.0 * n ** 3 + 9.0 * aa_abs2 * n + 16.0 * a2 ** 3
           - 18.0 * a2 ** 2 * n - 12.0 * a2 * (aa.real * a2))
    return n, np.maximum(g2u, 0.0), np.maximum(g3u, 0.0)


def moments(p: GaussianParams) -> MomentTriple:
    """Un-normalized moments of a displaced squeezed state."""
    g1, g2u, g3u = wick_moments(p.alpha_mag, p.r, p.theta)
    return MomentTriple(g1=float(g1), g2u=float(g2u), g3u=float(g3u))


def moments_expanded(p: GaussianParams) -> MomentTriple:
    """Same moments written out in hyperbolic/trigonometric form (independent code path)."""
    a2 = p.alpha_mag ** 2
    s, c = math.sinh(p.r), math.cosh(p.r)
    cos_t = math.cos(p.theta)
    g1 = a2 + s ** 2
    g2u = (c ** 2 * s ** 2 + 2 * s ** 4 + 4 * a2 * s ** 2
           - 2 * a2 * c * s * cos_t + a2 ** 2)
    g3u = (6 * s ** 6 + 18 * a2 * s ** 4 + 9 * a2 ** 2 * s ** 2 + a2 ** 3
           - 18 * a2 * s ** 3 * c * cos_t - 6 * a2 ** 2 * c * s * cos_t
           + 9 * s ** 4 * c ** 2 + 9 * a2 * s ** 2 * c ** 2)
    return MomentTriple(g1=g1, g2u=max(g2u, 0.0), g3u=max(g3u, 0.0))


def useful_expressions(p: GaussianParams) -> dict:
    """Expanded products used in the θ-minimum and mixture arguments."""
    a2 = p.alpha_mag ** 2
    s, c = math.sinh(p.r), math.cosh(p.r)
    cos_t = math.cos(p.theta)
    return {
        "g1_cubed": a2 ** 3 + 3 * a2 ** 2 * s ** 2 + 3 * a2 * s ** 4 + s ** 6,
        "g2u_g1": (a2 ** 3 + 5 * a2 ** 2 * s ** 2 + 2 * s ** 6 + s ** 4 * c ** 2
                   + 6 * a2 * s ** 4 + a2 * s ** 2 * c ** 2
                   - 2 * a2 ** 2 * s * c * cos_t - 2 * a2 * s ** 3 * c * cos_t),
        "aa_abs2": a2 ** 2 - 2 * a2 * c * s * cos_t + c ** 2 * s ** 2,
        "n_squared": a2 ** 2 + 2 * a2 * s ** 2 + s ** 4,
        "re_aa": a2 - c * s * cos_t,
    }


def correlations(m: MomentTriple) -> CorrelationPoint:
    """Normalize moments to (g⁽²⁾, g⁽³⁾)."""
    if m.g1 <= 0:
        raise ZeroIntensity("g2 and g3 are undefined at zero mean photon number")
    return CorrelationPoint(g2=m.g2u / m.g1 ** 2, g3=m.g3u / m.g1 ** 3)


def combine_moments(weighted: Sequence[Tuple[float, MomentTriple]]) -> MomentTriple:
    """Component-wise weighted sum of moment triples."""
    return MomentTriple(
        g1=math.fsum(w * m.g1 for w, m in weighted),
        g2u=math.fsum(w * m.g2u for w, m in weighted),
        g3u=math.fsum(w * m.g3u for w, m in weighted),
    )


def mixture_moments(mix: MixtureSpec) -> MomentTriple:
    """Moments of a statistical mixture: G⁽ⁿ⁾ → Σᵢ pᵢ Gᵢ⁽ⁿ⁾."""
    return combine_moments([(w, moments(p)) for w, p in mix.components])


def _compose_two(a: MomentTriple, b: MomentTriple) -> MomentTriple:
    # falling-factorial moments of a sum of independent photon numbers
    return MomentTriple(
        g1=a.g1 + b.g1,
        g2u=a.g2u + 2.0 * a.g1 * b.g1 + b.g2u,
        g3u=a.g3u + 3.0 * (a.g2u * b.g1 + a.g1 * b.g2u) + b.g3u,
    )


def multimode_moments(per_mode: List[MomentTriple]) -> MomentTriple:
    """
    Moments of the total photon number of independent modes.

    G¹ = Σ G¹ᵢ, G² = Σ G²ᵢ + 2Σ_{i<j} G¹ᵢG¹ⱼ,
    G³ = Σ G³ᵢ + 3Σ_{i<j}(G²ᵢG¹ⱼ + G¹ᵢG²ⱼ) + 6Σ_{i<j<k} G¹ᵢG¹ⱼG¹ₖ,
    accumulated one mode at a time.
    """
    if not per_mode:
        raise DomainError("multimode_moments needs at least one mode")
    total = per_mode[0]
    for mode in per_mode[1:]:
        total = _compose_two(total, mode)
    return total


def taylor_g2_g3(alpha: float, r: float) -> Tuple[float, float]:
    """Second-order expansion of (g², g³) in r around r = 0 at θ = 0."""
    if alpha <= 0:
        raise DomainError("the small-squeezing expansion needs alpha > 0")
    a2 = alpha * alpha
    g2 = 1.0 - 2.0 * r / a2 + (1.0 + 2.0 * a2) * r * r / a2 ** 2
    g3 = 1.0 - 6.0 * r / a2 + 3.0 * (3.0 + 2.0 * a2) * r * r / a2 ** 2
    return g2, g3


def alpha2_boundary(g2: float, r: float) -> Tuple[float, float]:
    """
    Both α² that reproduce g2 in the truncated expansion at squeezing r.

    alpha2_minus maps onto the lower boundary curve as r → 0 (for g2 < 1),
    alpha2_plus onto the upper one.
    """
    if g2 == 1.0:
        raise DomainError("alpha2_boundary is singular at g2 = 1")
    disc = g2 * r ** 2 - 2.0 * r ** 3 + r ** 4
    if disc < 0:
        raise DomainError(f"negative discriminant {disc} for g2={g2}, r={r}")
    root = math.sqrt(disc)
    base = r * r - r
    return (base + root) / (g2 - 1.0), (base - root) / (g2 - 1.0)


def theta_objective(alpha: float, r: float, theta, chi2: float):
    """G³ + χ₂·G²·G¹ at squeezing angle θ (scalar or array)."""
    g1, g2u, g3u = wick_moments(alpha, r, theta)
    return g3u + chi2 * g2u * g1


def mixture_inequality_terms(mix: MixtureSpec) -> Tuple[float, float]:
    """
    Left side of the mixed-state inequality and its per-component lower estimate.

    Returns (√ΣpG³ + 3√ΣpG²·√ΣpG¹ - 2(ΣpG¹)^{3/2}, Σp[√G³ + 3√G²√G¹ - 2(G¹)^{3/2}]).
    """
    total = mixture_moments(mix)
    lhs = (math.sqrt(total.g3u) + 3.0 * math.sqrt(total.g2u) * math.sqrt(total.g1)
           - 2.0 * total.g1 ** 1.5)
    parts = []
    for w, p in mix.components:
        m = moments(p)
        parts.append(w * (math.sqrt(m.g3u) + 3.0 * math.sqrt(m.g2u) * math.sqrt(m.g1) - 2.0 * m.g1 ** 1.5))
    return lhs, math.fsum(parts)


def multimode_inequality(per_mode: List[MomentTriple]) -> Tuple[float, float]:
    """Return (G³ + 9G²G¹ + 6√(G¹G²G³), 4[G¹]³) of the composed field."""
    m = multimode_moments(per_mode)
    lhs = m.g3u + 9.0 * m.g2u * m.g1 + 6.0 * math.sqrt(m.g1 * m.g2u * m.g3u)
    return lhs, 4.0 * m.g1 ** 3


def random_mixture(rng: np.random.Generator, max_components: int = 5,
                   alpha_max: float = 2.0, r_max: float = 2.0) -> MixtureSpec:
    """Draw a random Gaussian mixture (uniform parameters, Dirichlet weights)."""
    k = int(rng.integers(1, max_components + 1))
    weights = rng.dirichlet(np.ones(k))
    weights = np.clip(weights, 1e-12, None)
    weights = weights / weights.sum()
    components = []
    for w in weights:
        components.append((float(w), GaussianParams(
            alpha_mag=float(rng.uniform(0.0, alpha_max)),
            r=float(rng.uniform(0.0, r_max)),
            theta=float(rng.uniform(0.0, 2.0 * math.pi)),
        )))
    # absorb float drift of the normalization into the first weight
    drift = 1.0 - math.fsum(w for w, _ in components)
    components[0] = (components[0][0] + drift, components[0][1])
    return MixtureSpec(components=components)


def scan_axes(alpha_max: float, r_max: float, theta_max: float,
              shape: Tuple[int, int, int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evenly spaced α ∈ (0, α_max], r ∈ [0, r_max], θ ∈ [0, θ_max]."""
    n_alpha, n_r, n_theta = shape
    if min(shape) < 1:
        raise DomainError(f"scan grid {shape} must be non-empty")
    alpha = np.linspace(0.0, alpha_max, n_alpha + 1)[1:]
    r = np.linspace(0.0, r_max, n_r) if n_r > 1 else np.zeros(1)
    theta = np.linspace(0.0, theta_max, n_theta) if n_theta > 1 else np.zeros(1)
    return alpha, r, theta


def correlations_grid(alpha, r, theta) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(G¹, g², g³) on a broadcast grid; NaN where G¹ = 0."""
    g1, g2u, g3u = wick_moments(alpha, r, theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        g2 = np.where(g1 > 0, g2u / g1 ** 2, np.nan)
        g3 = np.where(g1 > 0, g3u / g1 ** 3, np.nan)
    return g1, g2, g3
