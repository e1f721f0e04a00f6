"""
Tests for the pulsed single-photon source simulator.
"""
import unittest
import math
import sys
import os

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np

import source_sim
import timetag
from models import AnalysisConfig, SourceConfig, ConfigError, ZeroIntensity

FULL_TESTS = os.environ.get("NGC_FULL_TESTS") == "1"


class TestSimulation(unittest.TestCase):
    """Test stream generation."""

    def test_no_pulses(self):
        self.assertEqual(len(source_sim.simulate(SourceConfig(n_pulses=0))), 0)

    def test_perfect_single_photons(self):
        cfg = SourceConfig(n_pulses=20000, emit_prob=1.0, seed=1)
        stream = source_sim.simulate(cfg)
        self.assertEqual(len(stream), 20000)
        c = timetag.count_coincidences(stream, AnalysisConfig(norm_delay_pulses=20, max_pulse_lag=5))
        self.assertEqual(c.pair_hist[0], 0)
        self.assertEqual(c.triple_same, 0)
        self.assertGreater(c.pair_hist[20], 0)

    def test_sorted_output(self):
        stream = source_sim.simulate(SourceConfig(n_pulses=5000, emit_prob=0.5, leak_prob=0.2, seed=2))
        self.assertTrue(np.all(np.diff(stream.times) >= 0))
        self.assertTrue(set(np.unique(stream.channels)) <= {0, 1, 2})

    def test_deterministic(self):
        cfg = SourceConfig(n_pulses=10000, emit_prob=0.3, two_photon_prob=0.01, seed=42)
        a = source_sim.simulate(cfg, block_pulses=1000)
        b = source_sim.simulate(cfg, block_pulses=1000)
        c = source_sim.simulate(cfg, n_jobs=2, block_pulses=1000)
        for other in (b, c):
            np.testing.assert_array_equal(a.times, other.times)
            np.testing.assert_array_equal(a.channels, other.channels)

    def test_seed_changes_stream(self):
        a = source_sim.simulate(SourceConfig(n_pulses=1000, emit_prob=0.5, seed=1))
        b = source_sim.simulate(SourceConfig(n_pulses=1000, emit_prob=0.5, seed=2))
        self.assertFalse(len(a) == len(b) and np.array_equal(a.times, b.times))

    def test_invalid_config(self):
        with self.assertRaises(ConfigError):
            SourceConfig(split=(0.5, 0.5, 0.5))
        with self.assertRaises(ConfigError):
            SourceConfig(emit_prob=0.8, two_photon_prob=0.3)
        with self.assertRaises(ConfigError):
            SourceConfig(leak_prob=-0.1)
        with self.assertRaises(ConfigError):
            source_sim.simulate(SourceConfig(n_pulses=10), block_pulses=0)

    def test_singles_budget(self):
        cfg = SourceConfig(n_pulses=200_000, emit_prob=0.1, two_photon_prob=0.01, leak_prob=0.02,
                           detection_efficiency=0.6, seed=3)
        measured = np.bincount(source_sim.simulate(cfg).channels, minlength=3)
        expected = source_sim.expected_singles(cfg)
        for m, e in zip(measured, expected):
            self.assertLess(abs(m - e), 4 * math.sqrt(e))

    def test_cascade_split(self):
        self.assertEqual(source_sim.cascade_split(), (0.5, 0.25, 0.25))
        self.assertEqual(SourceConfig().split, source_sim.cascade_split())


class TestAnalyticCorrelations(unittest.TestCase):
    """Test the analytic photon-number model of the source."""

    def test_moments(self):
        m = source_sim.photon_number_moments(SourceConfig(emit_prob=0.1, two_photon_prob=0.01, three_photon_prob=0.001))
        self.assertAlmostEqual(m.g1, 0.123)
        self.assertAlmostEqual(m.g2u, 0.026)
        self.assertAlmostEqual(m.g3u, 0.006)

    def test_leakage_only_is_coherent(self):
        c = source_sim.intrinsic_correlations(SourceConfig(emit_prob=0.0, leak_prob=0.2))
        self.assertAlmostEqual(c.g2, 1.0, places=12)
        self.assertAlmostEqual(c.g3, 1.0, places=12)

    def test_losses_do_not_change_correlations(self):
        base = SourceConfig(emit_prob=0.2, two_photon_prob=0.01, leak_prob=0.05)
        lossy = base.model_copy(update={"detection_efficiency": 0.3})
        a = source_sim.intrinsic_correlations(base)
        b = source_sim.intrinsic_correlations(lossy)
        self.assertAlmostEqual(a.g2, b.g2, places=12)
        self.assertAlmostEqual(a.g3, b.g3, places=12)

    def test_dark_source(self):
        with self.assertRaises(ZeroIntensity):
            source_sim.intrinsic_correlations(SourceConfig(emit_prob=0.0))

    def test_two_photon_prob_for_g2(self):
        p2 = source_sim.two_photon_prob_for_g2(0.05, 0.1)
        cfg = SourceConfig(emit_prob=0.1, two_photon_prob=p2)
        self.assertAlmostEqual(source_sim.intrinsic_correlations(cfg).g2, 0.05, places=12)
        self.assertAlmostEqual(source_sim.two_photon_prob_for_g2(0.00334, 0.1), 1.67e-5, delta=1e-7)
        self.assertEqual(source_sim.two_photon_prob_for_g2(0.0, 0.1), 0.0)
        with self.assertRaises(ConfigError):
            source_sim.two_photon_prob_for_g2(0.1, 0.0)


class TestRecovery(unittest.TestCase):
    """Test that the analysis recovers the configured g²."""

    def _recover(self, n_pulses, g2_target, seed):
        p2 = source_sim.two_photon_prob_for_g2(g2_target, 0.1)
        cfg = SourceConfig(n_pulses=n_pulses, emit_prob=0.1, two_photon_prob=p2, seed=seed)
        acfg = AnalysisConfig()
        c = timetag.count_coincidences(source_sim.simulate(cfg), acfg)
        return timetag.estimate_g2(c, acfg)

    def test_g2_recovery(self):
        g2, sigma = self._recover(1_000_000, 0.05, seed=11)
        self.assertLess(abs(g2 - 0.05), 4 * sigma)

    @unittest.skipUnless(FULL_TESTS, "set NGC_FULL_TESTS=1 for the 10⁷-pulse run")
    def test_g2_recovery_large(self):
        g2, sigma = self._recover(10_000_000, 0.05, seed=12)
        self.assertLess(abs(g2 - 0.05), 3 * sigma)


class TestLeakageAndThinning(unittest.TestCase):
    """Test the leakage scenario and post-hoc attenuation."""

    def test_leakage_preset(self):
        cfg = source_sim.leakage_preset(SourceConfig(seed=9, n_pulses=10))
        self.assertEqual(cfg.leak_prob, source_sim.LEAKAGE_PRESET["leak_prob"])
        self.assertEqual(cfg.lifetime_ps, source_sim.LEAKAGE_PRESET["lifetime_ps"])
        self.assertEqual(cfg.seed, 9)

    def test_warning_without_leakage(self):
        with self.assertLogs("source_sim", level="WARNING"):
            source_sim.leakage_scenario(SourceConfig(n_pulses=10))

    def test_thin_stream(self):
        stream = source_sim.simulate(SourceConfig(n_pulses=20000, emit_prob=0.5, seed=4))
        self.assertEqual(len(source_sim.thin_stream(stream, 0.0)), 0)
        self.assertEqual(len(source_sim.thin_stream(stream, 1.0)), len(stream))
        half = source_sim.thin_stream(stream, 0.5, seed=1)
        self.assertLess(abs(len(half) - len(stream) / 2), 4 * math.sqrt(len(stream) / 4))
        self.assertTrue(np.all(np.diff(half.times) >= 0))
        with self.assertRaises(ConfigError):
            source_sim.thin_stream(stream, 1.5)

    def test_thinning_keeps_correlations(self):
        cfg = SourceConfig(n_pulses=100_000, emit_prob=0.2, two_photon_prob=0.2, three_photon_prob=0.2,
                           leak_prob=0.3, seed=21)
        acfg = AnalysisConfig(norm_delay_pulses=20, max_pulse_lag=5)
        stream = source_sim.simulate(cfg)
        full = timetag.count_coincidences(stream, acfg)
        g2, g2_sigma = timetag.estimate_g2(full, acfg)
        g3, g3_sigma, _ = timetag.estimate_g3(full, acfg)
        for eta in (0.5, 0.2):
            with self.subTest(eta=eta):
                thinned = timetag.count_coincidences(source_sim.thin_stream(stream, eta, seed=5), acfg)
                t2, t2_sigma = timetag.estimate_g2(thinned, acfg)
                t3, t3_sigma, upper = timetag.estimate_g3(thinned, acfg)
                self.assertFalse(upper)
                self.assertLess(abs(t2 - g2), 3 * math.hypot(t2_sigma, g2_sigma))
                self.assertLess(abs(t3 - g3), 3 * math.hypot(t3_sigma, g3_sigma))
                lossy = cfg.model_copy(update={"detection_efficiency": eta})
                a = source_sim.intrinsic_correlations(cfg)
                b = source_sim.intrinsic_correlations(lossy)
                self.assertAlmostEqual(a.g2, b.g2, places=12)
                self.assertAlmostEqual(a.g3, b.g3, places=12)


if __name__ == "__main__":
    unittest.main(verbosity=2)
