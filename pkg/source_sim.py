"""
Monte-Carlo click streams of a pulsed single-photon source routed to three detectors.

Pulse k (k = 1 … n_pulses) is centred at k·period_ps. Each pulse carries 0-3
emitter photons with exponential delays plus Poissonian laser-leakage photons
with narrow Gaussian delays; every photon is detected independently, routed to a
detector by the split probabilities and smeared by Gaussian jitter.
"""
import math
import logging
from typing import Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from config import SIM_BLOCK_PULSES, CASCADE_SPLIT, N_CHANNELS
from models import SourceConfig, MomentTriple, CorrelationPoint, ConfigError
from timetag import ClickStream
import gaussian_model

logger = logging.getLogger(__name__)

LEAKAGE_PRESET = {"leak_prob": 0.05, "leak_width_ps": 50.0, "lifetime_ps": 1000.0}


def cascade_split() -> Tuple[float, float, float]:
    """Routing of a 50:50 splitter followed by a second 50:50 splitter on one arm."""
    return CASCADE_SPLIT


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _emitter_photons(rng: np.random.Generator, cfg: SourceConfig, n: int) -> np.ndarray:
    """Categorical photon number per pulse over {0, 1, 2, 3}."""
    u = rng.random(n)
    p1, p2, p3 = cfg.emit_prob, cfg.two_photon_prob, cfg.three_photon_prob
    counts = np.zeros(n, dtype=np.int64)
    counts[u < p3] = 3
    counts[(u >= p3) & (u < p3 + p2)] = 2
    counts[(u >= p3 + p2) & (u < p3 + p2 + p1)] = 1
    return counts


def _simulate_block(cfg: SourceConfig, block: int, first_pulse: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    rng = _block_rng(cfg.seed, block)
    pulse_idx = first_pulse + np.arange(n, dtype=np.int64)

    qd_counts = _emitter_photons(rng, cfg, n)
    qd_pulses = np.repeat(pulse_idx, qd_counts)
    qd_delay = rng.exponential(cfg.lifetime_ps, qd_pulses.size)

    leak_counts = rng.poisson(cfg.leak_prob, n) if cfg.leak_prob > 0 else np.zeros(n, dtype=np.int64)
    leak_pulses = np.repeat(pulse_idx, leak_counts)
    leak_delay = rng.normal(0.0, cfg.leak_width_ps, leak_pulses.size) if cfg.leak_width_ps > 0 \
        else np.zeros(leak_pulses.size)

    pulses = np.concatenate([qd_pulses, leak_pulses])
    delays = np.concatenate([qd_delay, leak_delay])
    detected = rng.random(pulses.size) < cfg.detection_efficiency
    channels = rng.choice(N_CHANNELS, size=pulses.size, p=np.asarray(cfg.split, dtype=float))
    jitter = rng.normal(0.0, cfg.jitter_ps, pulses.size) if cfg.jitter_ps > 0 else np.zeros(pulses.size)

    times = np.rint(pulses * float(cfg.period_ps) + delays + jitter).astype(np.int64)
    keep = detected & (times >= 0)
    return channels[keep].astype(np.uint8), times[keep]


def simulate(cfg: SourceConfig, n_jobs: int = 1, block_pulses: int = SIM_BLOCK_PULSES) -> ClickStream:
    """
    Generate the sorted click stream of a source configuration.

    Pulse blocks draw from independent SeedSequence substreams keyed by block
    index, so the stream depends only on (cfg, block_pulses), not on n_jobs.
    """
    if block_pulses <= 0:
        raise ConfigError("block_pulses must be positive")
    blocks = []
    for block, start in enumerate(range(0, cfg.n_pulses, block_pulses)):
        blocks.append((block, start + 1, min(block_pulses, cfg.n_pulses - start)))
    if not blocks:
        return ClickStream.empty()

    if n_jobs == 1:
        parts = [_simulate_block(cfg, b, first, n) for b, first, n in blocks]
    else:
        parts = Parallel(n_jobs=n_jobs)(delayed(_simulate_block)(cfg, b, first, n) for b, first, n in blocks)
    channels = np.concatenate([c for c, _ in parts])
    times = np.concatenate([t for _, t in parts])
    order = np.lexsort((channels, times))
    stream = ClickStream(channels[order], times[order])
    logger.info(f"Simulated {cfg.n_pulses} pulses -> {len(stream)} clicks (seed {cfg.seed})")
    return stream


def leakage_preset(base: Optional[SourceConfig] = None) -> SourceConfig:
    """Configuration with strong laser leakage and a slow emitter."""
    data = (base or SourceConfig()).model_dump()
    data.update(LEAKAGE_PRESET)
    return SourceConfig(**data)


def leakage_scenario(cfg: SourceConfig, n_jobs: int = 1) -> ClickStream:
    """Simulated stream whose same-pulse triples contain leakage photons."""
    if cfg.leak_prob <= 0:
        logger.warning("leakage_scenario called without leakage; Jacobi ridges will be absent")
    return simulate(cfg, n_jobs=n_jobs)


def thin_stream(stream: ClickStream, eta: float, seed: int = 0) -> ClickStream:
    """Keep every click independently with probability eta."""
    if not (0.0 <= eta <= 1.0):
        raise ConfigError(f"attenuation eta={eta} must lie in [0, 1]")
    keep = np.random.default_rng(seed).random(len(stream)) < eta
    return ClickStream(stream.channels[keep], stream.times[keep], stream.n_channels)


def photon_number_moments(cfg: SourceConfig) -> MomentTriple:
    """Falling-factorial moments of the detected photon number per pulse."""
    p1, p2, p3 = cfg.emit_prob, cfg.two_photon_prob, cfg.three_photon_prob
    emitter = MomentTriple(g1=p1 + 2 * p2 + 3 * p3, g2u=2 * p2 + 6 * p3, g3u=6 * p3)
    lam = cfg.leak_prob
    leakage = MomentTriple(g1=lam, g2u=lam ** 2, g3u=lam ** 3)
    total = gaussian_model.multimode_moments([emitter, leakage])
    eta = cfg.detection_efficiency
    return MomentTriple(g1=eta * total.g1, g2u=eta ** 2 * total.g2u, g3u=eta ** 3 * total.g3u)


def intrinsic_correlations(cfg: SourceConfig) -> CorrelationPoint:
    """Analytic g² and g³ of the configured source (independent of losses and routing)."""
    return gaussian_model.correlations(photon_number_moments(cfg))


def expected_singles(cfg: SourceConfig) -> np.ndarray:
    """Mean detected clicks per channel, before the analysis window."""
    return cfg.n_pulses * photon_number_moments(cfg).g1 * np.asarray(cfg.split, dtype=float)


def two_photon_prob_for_g2(g2: float, emit_prob: float) -> float:
    """p₂ giving the requested g² for a source with p₃ = 0 and no leakage (g² = 2p₂/(p₁+2p₂)²)."""
    if g2 < 0 or emit_prob <= 0:
        raise ConfigError("g2 >= 0 and emit_prob > 0 required")
    if g2 == 0:
        return 0.0
    # 4g²p₂² + (4g²p₁ - 2)p₂ + g²p₁² = 0, smaller root
    a, b, c = 4.0 * g2, 4.0 * g2 * emit_prob - 2.0, g2 * emit_prob ** 2
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise ConfigError(f"g2={g2} is not reachable with emit_prob={emit_prob}")
    return (-b - math.sqrt(disc)) / (2.0 * a)
