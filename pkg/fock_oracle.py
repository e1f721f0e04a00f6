"""
Brute-force moments in a truncated Fock space, used as ground truth for the closed forms.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import expm

from config import TAIL_TOL, MAX_FOCK_DIM, WEIGHT_SUM_TOL
from models import GaussianParams, MixtureSpec, MomentTriple, TruncationError, DomainError
import gaussian_model

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FockVector:
    """Number-basis amplitudes ψ₀ … ψ_{N-1} of a single-mode pure state."""
    dim: int
    amplitudes: np.ndarray = field(repr=False)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.probabilities))


@dataclass(frozen=True)
class DensityMixture:
    """Incoherent mixture Σᵢ pᵢ |ψᵢ⟩⟨ψᵢ| of Fock vectors sharing one dimension."""
    dim: int
    terms: Tuple[Tuple[float, FockVector], ...]

    def __post_init__(self):
        total = math.fsum(w for w, _ in self.terms)
        if not self.terms or abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise DomainError(f"mixture weights sum to {total!r}, expected 1")


State = Union[FockVector, DensityMixture]


def default_dim(p: GaussianParams) -> int:
    """Starting truncation ceil(8(|α|² + sinh²r) + 30)."""
    return int(math.ceil(8.0 * (p.alpha_mag ** 2 + math.sinh(p.r) ** 2) + 30))


def _recurrence_amplitudes(p: GaussianParams, dim: int) -> np.ndarray:
    alpha = complex(p.alpha_mag, 0.0)
    ch, sh = math.cosh(p.r), math.sinh(p.r)
    phase = complex(math.cos(p.theta), math.sin(p.theta))
    gamma = alpha * ch + alpha.conjugate() * phase * sh
    psi = np.zeros(dim, dtype=complex)
    psi[0] = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * alpha.conjugate() ** 2 * phase * math.tanh(p.r)) / math.sqrt(ch)
    if dim > 1:
        psi[1] = gamma * psi[0] / ch
    for n in range(1, dim - 1):
        psi[n + 1] = (gamma * psi[n] - phase * sh * math.sqrt(n) * psi[n - 1]) / (ch * math.sqrt(n + 1))
    return psi


def _falling_weights(dim: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = np.arange(dim, dtype=float)
    return n, n * (n - 1.0), n * (n - 1.0) * (n - 2.0)


def _within_budget(probs: np.ndarray, tail_tol: float) -> bool:
    """Norm deficit and last-entry weight below the tail budget."""
    deficit = 1.0 - float(np.sum(probs))
    return deficit <= tail_tol and probs[-1] < tail_tol


def _moments_converged(probs: np.ndarray, tail_tol: float) -> bool:
    """Top tenth of the basis carries a negligible share of every moment up to third order."""
    k = max(1, probs.size // 10)
    for weight in (np.ones(probs.size),) + _falling_weights(probs.size):
        total = float(np.dot(weight, probs))
        tail = float(np.dot(weight[-k:], probs[-k:]))
        if total > 0 and tail > tail_tol * total:
            return False
    return True


def build_displaced_squeezed(p: GaussianParams, dim: Optional[int] = None,
                             tail_tol: float = TAIL_TOL) -> FockVector:
    """
    D(α)S(ξ)|0⟩ by the three-term number-basis recurrence.

    Without dim the truncation starts at default_dim(p) and doubles until every
    moment up to third order has converged; an explicit dim that leaves more than
    tail_tol outside the basis raises TruncationError.
    """
    if dim is not None:
        if dim < 2:
            raise DomainError("Fock dimension must be at least 2")
        psi = _recurrence_amplitudes(p, dim)
        probs = np.abs(psi) ** 2
        if not _within_budget(probs, tail_tol):
            raise TruncationError(
                f"dim={dim} leaves {1.0 - probs.sum():.3e} of the norm outside the basis "
                f"(last level {probs[-1]:.3e}, budget {tail_tol:.1e})"
            )
        return FockVector(dim=dim, amplitudes=psi)

    dim = default_dim(p)
    while True:
        psi = _recurrence_amplitudes(p, dim)
        probs = np.abs(psi) ** 2
        if _within_budget(probs, tail_tol) and _moments_converged(probs, tail_tol):
            return FockVector(dim=dim, amplitudes=psi)
        if dim >= MAX_FOCK_DIM:
            raise TruncationError(f"no converged truncation below {MAX_FOCK_DIM} for {p}")
        logger.debug(f"Growing Fock dimension from {dim} for alpha={p.alpha_mag}, r={p.r}")
        dim = min(2 * dim, MAX_FOCK_DIM)


def build_displaced_squeezed_dense(p: GaussianParams, dim: int, pad: Optional[int] = None) -> FockVector:
    """Second construction: dense matrix exponentials on a padded basis, cut back to dim."""
    size = pad if pad is not None else max(2 * dim, dim + 60)
    a = np.diag(np.sqrt(np.arange(1, size, dtype=float)), 1).astype(complex)
    ad = a.conj().T
    xi = p.xi
    squeeze = expm(0.5 * (np.conj(xi) * a @ a - xi * ad @ ad))
    alpha = complex(p.alpha_mag, 0.0)
    displace = expm(alpha * ad - np.conj(alpha) * a)
    vac = np.zeros(size, dtype=complex)
    vac[0] = 1.0
    psi = displace @ (squeeze @ vac)
    return FockVector(dim=dim, amplitudes=psi[:dim].copy())


def fock_state(n: int, dim: int) -> FockVector:
    """Number state |n⟩."""
    if not (0 <= n < dim):
        raise DomainError(f"|{n}> does not fit in dimension {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return FockVector(dim=dim, amplitudes=psi)


def coherent_state(alpha: float, dim: Optional[int] = None) -> FockVector:
    """Coherent state |α⟩."""
    return build_displaced_squeezed(GaussianParams(alpha_mag=alpha), dim)


def _padded(state: FockVector, dim: int) -> FockVector:
    if state.dim == dim:
        return state
    psi = np.zeros(dim, dtype=complex)
    psi[:state.dim] = state.amplitudes
    return FockVector(dim=dim, amplitudes=psi)


def build_mixture(mix: MixtureSpec, dim: Optional[int] = None) -> DensityMixture:
    """Fock representation of a Gaussian mixture on a common dimension."""
    vectors = [(w, build_displaced_squeezed(p, dim)) for w, p in mix.components]
    common = max(v.dim for _, v in vectors)
    return DensityMixture(dim=common, terms=tuple((w, _padded(v, common)) for w, v in vectors))


def photon_distribution(state: State) -> np.ndarray:
    """Photon-number probabilities of a pure state or mixture."""
    if isinstance(state, DensityMixture):
        return np.sum([w * v.probabilities for w, v in state.terms], axis=0)
    return state.probabilities


def _distribution_moments(probs: np.ndarray) -> MomentTriple:
    n, n2, n3 = _falling_weights(probs.size)
    return MomentTriple(g1=float(np.dot(n, probs)), g2u=float(np.dot(n2, probs)), g3u=float(np.dot(n3, probs)))


def oracle_moments(state: State) -> MomentTriple:
    """Falling-factorial moments Σₙ n(n-1)…(n-k+1)|ψₙ|² of the number distribution."""
    return _distribution_moments(photon_distribution(state))


def oracle_multimode_moments(states: Sequence[State]) -> MomentTriple:
    """Moments of n_tot over a product of independent modes, by convolving their distributions."""
    if not states:
        raise DomainError("oracle_multimode_moments needs at least one mode")
    total = photon_distribution(states[0])
    for state in states[1:]:
        total = np.convolve(total, photon_distribution(state))
    return _distribution_moments(total)


def relative_deviation(a: MomentTriple, b: MomentTriple, floor: float = 1e-300) -> float:
    """Largest relative difference across the three moments."""
    worst = 0.0
    for x, y in ((a.g1, b.g1), (a.g2u, b.g2u), (a.g3u, b.g3u)):
        scale = max(abs(x), abs(y))
        if scale > floor:
            worst = max(worst, abs(x - y) / scale)
    return worst


def _deviation_for(params: GaussianParams, moment_fn, dim: Optional[int]) -> float:
    return relative_deviation(moment_fn(params), oracle_moments(build_displaced_squeezed(params, dim)))


def max_relative_deviation(params_list: Sequence[GaussianParams], moment_fn=None,
                           dim: Optional[int] = None, n_jobs: int = 1) -> Tuple[float, Optional[GaussianParams]]:
    """Worst closed-form vs oracle deviation over a parameter list, evaluated in parallel chunks."""
    moment_fn = moment_fn or gaussian_model.moments
    if n_jobs == 1:
        deviations = [_deviation_for(p, moment_fn, dim) for p in params_list]
    else:
        deviations = Parallel(n_jobs=n_jobs)(delayed(_deviation_for)(p, moment_fn, dim) for p in params_list)
    if not deviations:
        return 0.0, None
    worst = int(np.argmax(deviations))
    return float(deviations[worst]), params_list[worst]
