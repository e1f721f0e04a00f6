"""
Tests for the closed-form moments of displaced squeezed states and their mixtures.
"""
import unittest
import math
import sys
import os

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np

import gaussian_model
from models import GaussianParams, MomentTriple, MixtureSpec, ZeroIntensity, DomainError


class TestGaussianParams(unittest.TestCase):
    """Test parameter validation and phase canonicalization."""

    def test_phase_folded_into_theta(self):
        """Test that a displacement phase φ becomes θ - 2φ."""
        p = GaussianParams(alpha_mag=0.5, phi=0.4, r=0.3, theta=1.0)
        self.assertEqual(p.phi, 0.0)
        self.assertAlmostEqual(p.theta, 0.2, places=12)

    def test_theta_wrapped(self):
        """Test that θ is reduced to [0, 2π)."""
        p = GaussianParams(r=0.1, theta=-0.5)
        self.assertAlmostEqual(p.theta, 2 * math.pi - 0.5, places=12)

    def test_negative_values_rejected(self):
        """Test that negative α or r raise DomainError."""
        with self.assertRaises(DomainError):
            GaussianParams(alpha_mag=-0.1)
        with self.assertRaises(DomainError):
            GaussianParams(r=-1.0)
        with self.assertRaises(DomainError):
            GaussianParams(alpha_mag=float("nan"))


class TestFirstOrderExpectations(unittest.TestCase):
    """Test ⟨a⟩, ⟨aa⟩ and ⟨a†a⟩."""

    def test_vacuum(self):
        a, aa, n = gaussian_model.first_order_expectations(gaussian_model.vacuum())
        self.assertEqual((a, aa, n), (0, 0, 0))

    def test_coherent(self):
        a, aa, n = gaussian_model.first_order_expectations(gaussian_model.coherent(0.5))
        self.assertAlmostEqual(a.real, 0.5)
        self.assertAlmostEqual(aa.real, 0.25)
        self.assertAlmostEqual(n, 0.25)

    def test_weakly_squeezed(self):
        """Test the boundary-adjacent state α=0.2, r=0.01."""
        a, aa, n = gaussian_model.first_order_expectations(GaussianParams(alpha_mag=0.2, r=0.01))
        self.assertAlmostEqual(a.real, 0.2)
        self.assertAlmostEqual(aa.real, 0.0299993, places=7)
        self.assertAlmostEqual(aa.imag, 0.0, places=15)
        self.assertAlmostEqual(n, 0.0401000, places=7)


class TestMoments(unittest.TestCase):
    """Test the Wick-expanded moments."""

    def test_coherent_moments(self):
        m = gaussian_model.moments(gaussian_model.coherent(1.0))
        self.assertAlmostEqual(m.g1, 1.0)
        self.assertAlmostEqual(m.g2u, 1.0)
        self.assertAlmostEqual(m.g3u, 1.0)
        c = gaussian_model.correlations(m)
        self.assertAlmostEqual(c.g2, 1.0)
        self.assertAlmostEqual(c.g3, 1.0)

    def test_squeezed_vacuum(self):
        """Test g² = 3 + 1/sinh²(r) for squeezed vacuum at any angle."""
        s, ch = math.sinh(0.5), math.cosh(0.5)
        for theta in (0.0, 1.3, 4.0):
            m = gaussian_model.moments(gaussian_model.squeezed_vacuum(0.5, theta))
            self.assertAlmostEqual(m.g1, s ** 2, places=12)
            self.assertAlmostEqual(m.g2u, ch ** 2 * s ** 2 + 2 * s ** 4, places=12)
            self.assertAlmostEqual(gaussian_model.correlations(m).g2, 3 + 1 / s ** 2, places=9)

    def test_boundary_adjacent_state(self):
        m = gaussian_model.moments(GaussianParams(alpha_mag=0.2, r=0.01))
        self.assertAlmostEqual(m.g1, 0.04010, places=5)
        self.assertAlmostEqual(m.g2u / 9.160e-4, 1.0, places=3)
        c = gaussian_model.correlations(m)
        self.assertAlmostEqual(c.g2, 0.5696, places=3)
        self.assertAlmostEqual(c.g3, 0.0747, places=3)

    def test_expanded_form_agrees(self):
        """Test the hyperbolic expansion against the Wick form."""
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = GaussianParams(alpha_mag=rng.uniform(0, 2), r=rng.uniform(0, 1.5), theta=rng.uniform(0, 6.28))
            a, b = gaussian_model.moments(p), gaussian_model.moments_expanded(p)
            for x, y in ((a.g1, b.g1), (a.g2u, b.g2u), (a.g3u, b.g3u)):
                self.assertLessEqual(abs(x - y), 1e-9 * max(abs(x), abs(y), 1e-12))

    def test_useful_expressions(self):
        p = GaussianParams(alpha_mag=0.7, r=0.4, theta=0.9)
        m = gaussian_model.moments(p)
        expr = gaussian_model.useful_expressions(p)
        self.assertAlmostEqual(expr["g1_cubed"], m.g1 ** 3, places=12)
        self.assertAlmostEqual(expr["g2u_g1"], m.g2u * m.g1, places=12)

    def test_phase_invariance(self):
        """Test that moments depend on θ - 2φ only."""
        a = gaussian_model.moments(GaussianParams(alpha_mag=0.8, phi=1.1, r=0.6, theta=0.3))
        b = gaussian_model.moments(GaussianParams(alpha_mag=0.8, r=0.6, theta=0.3 - 2.2))
        self.assertAlmostEqual(a.g3u, b.g3u, places=12)


class TestCorrelations(unittest.TestCase):
    """Test normalization to g² and g³."""

    def test_single_photon(self):
        c = gaussian_model.correlations(MomentTriple(g1=1, g2u=0, g3u=0))
        self.assertEqual((c.g2, c.g3), (0.0, 0.0))

    def test_zero_intensity(self):
        with self.assertRaises(ZeroIntensity):
            gaussian_model.correlations(gaussian_model.moments(gaussian_model.vacuum()))

    def test_ratio_arithmetic(self):
        c = gaussian_model.correlations(MomentTriple(g1=0.04010, g2u=9.160e-4, g3u=4.82e-6))
        self.assertAlmostEqual(c.g2, 0.5696, places=3)
        self.assertAlmostEqual(c.g3, 0.0747, places=3)


class TestMixtures(unittest.TestCase):
    """Test moments of statistical mixtures."""

    def test_identity_mixture(self):
        p = GaussianParams(alpha_mag=0.4, r=0.2, theta=1.0)
        mix = MixtureSpec(components=[(1.0, p)])
        self.assertEqual(gaussian_model.mixture_moments(mix), gaussian_model.moments(p))

    def test_counterexample_below_boundary(self):
        """Test that the 0.75/0.25 mixture lands below the pure-state curve."""
        mix = MixtureSpec(components=[(0.75, GaussianParams(alpha_mag=0.2, r=0.01)),
                                      (0.25, gaussian_model.vacuum())])
        m = gaussian_model.mixture_moments(mix)
        self.assertAlmostEqual(m.g1, 0.030075, places=6)
        c = gaussian_model.correlations(m)
        self.assertAlmostEqual(c.g2, 0.7595, places=3)
        self.assertAlmostEqual(c.g3, 0.1328, places=3)
        self.assertLess(c.g3, (2 - 3 * math.sqrt(c.g2)) ** 2)

    def test_coherent_vacuum_mixture(self):
        mix = MixtureSpec(components=[(0.5, gaussian_model.coherent(1.0)), (0.5, gaussian_model.vacuum())])
        c = gaussian_model.correlations(gaussian_model.mixture_moments(mix))
        self.assertAlmostEqual(c.g2, 2.0)
        self.assertAlmostEqual(c.g3, 4.0)

    def test_invalid_weights(self):
        with self.assertRaises(DomainError):
            MixtureSpec(components=[(0.5, gaussian_model.vacuum()), (0.4, gaussian_model.vacuum())])
        with self.assertRaises(DomainError):
            MixtureSpec(components=[])

    def test_mixture_inequality_terms(self):
        """Test the per-component estimate never exceeds the mixture left side."""
        rng = np.random.default_rng(11)
        for _ in range(200):
            mix = gaussian_model.random_mixture(rng)
            lhs, parts = gaussian_model.mixture_inequality_terms(mix)
            self.assertGreaterEqual(lhs, parts - 1e-9 * max(1.0, abs(lhs)))
            self.assertGreaterEqual(parts, -1e-9)


class TestMultimode(unittest.TestCase):
    """Test moment composition over independent modes."""

    def test_single_mode(self):
        m = MomentTriple(g1=0.3, g2u=0.1, g3u=0.02)
        self.assertEqual(gaussian_model.multimode_moments([m]), m)

    def test_two_coherent_modes(self):
        one = MomentTriple(g1=1, g2u=1, g3u=1)
        m = gaussian_model.multimode_moments([one, one])
        self.assertEqual((m.g1, m.g2u, m.g3u), (2, 4, 8))
        c = gaussian_model.correlations(m)
        self.assertAlmostEqual(c.g2, 1.0)
        self.assertAlmostEqual(c.g3, 1.0)

    def test_two_single_photons(self):
        one = MomentTriple(g1=1, g2u=0, g3u=0)
        m = gaussian_model.multimode_moments([one, one])
        self.assertEqual((m.g1, m.g2u, m.g3u), (2, 2, 0))
        self.assertAlmostEqual(gaussian_model.correlations(m).g2, 0.5)

    def test_empty_modes(self):
        with self.assertRaises(DomainError):
            gaussian_model.multimode_moments([])

    def test_multimode_inequality(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            modes = [gaussian_model.moments(GaussianParams(alpha_mag=rng.uniform(0, 1.5), r=rng.uniform(0, 1),
                                                           theta=rng.uniform(0, 6.28))) for _ in range(3)]
            lhs, rhs = gaussian_model.multimode_inequality(modes)
            self.assertGreaterEqual(lhs, rhs * (1 - 1e-9))


class TestExpansion(unittest.TestCase):
    """Test the small-squeezing expansion and its inversion."""

    def test_coherent_limit(self):
        self.assertEqual(gaussian_model.taylor_g2_g3(1.0, 0.0), (1.0, 1.0))

    def test_expansion_values(self):
        g2, g3 = gaussian_model.taylor_g2_g3(1.0, 0.01)
        self.assertAlmostEqual(g2, 0.98030, places=10)
        self.assertAlmostEqual(g3, 0.94150, places=10)
        self.assertAlmostEqual(gaussian_model.taylor_g2_g3(0.5, 0.001)[0], 0.992024, places=9)

    def test_expansion_matches_exact(self):
        exact = gaussian_model.correlations(gaussian_model.moments(GaussianParams(alpha_mag=1.0, r=0.01)))
        g2, g3 = gaussian_model.taylor_g2_g3(1.0, 0.01)
        self.assertAlmostEqual(exact.g2, g2, places=4)
        self.assertAlmostEqual(exact.g3, g3, places=4)

    def test_alpha2_roots_reproduce_g2(self):
        for root in gaussian_model.alpha2_boundary(0.25, 0.01):
            self.assertGreater(root, 0)
            g2, _ = gaussian_model.taylor_g2_g3(math.sqrt(root), 0.01)
            self.assertAlmostEqual(g2, 0.25, places=10)

    def test_alpha2_singular(self):
        with self.assertRaises(DomainError):
            gaussian_model.alpha2_boundary(1.0, 0.1)

    def test_theta_zero_minimizes(self):
        thetas = np.linspace(0, 2 * math.pi, 61)
        values = gaussian_model.theta_objective(0.6, 0.4, thetas, 9.0)
        self.assertLessEqual(values[0], values.min() + 1e-12)


class TestScanGrid(unittest.TestCase):
    """Test the vectorized scan helpers."""

    def test_axes(self):
        alpha, r, theta = gaussian_model.scan_axes(1.0, 1.0, math.pi, (4, 3, 2))
        np.testing.assert_allclose(alpha, [0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(r, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(theta, [0.0, math.pi])

    def test_single_point_grid(self):
        alpha, r, theta = gaussian_model.scan_axes(1.0, 1.0, 0.0, (1, 1, 1))
        self.assertEqual((alpha.size, r.size, theta.size), (1, 1, 1))
        self.assertEqual(alpha[0], 1.0)

    def test_empty_grid(self):
        with self.assertRaises(DomainError):
            gaussian_model.scan_axes(1.0, 1.0, 1.0, (0, 1, 1))

    def test_grid_matches_scalar(self):
        a, r, t = np.meshgrid([0.3, 0.9], [0.0, 0.5], [0.0, 2.0], indexing="ij")
        g1, g2, g3 = gaussian_model.correlations_grid(a, r, t)
        c = gaussian_model.correlations(gaussian_model.moments(GaussianParams(alpha_mag=0.9, r=0.5, theta=2.0)))
        self.assertAlmostEqual(g2[1, 1, 1], c.g2, places=12)
        self.assertAlmostEqual(g3[1, 1, 1], c.g3, places=12)

    def test_zero_intensity_is_nan(self):
        _, g2, _ = gaussian_model.correlations_grid(np.array([0.0]), np.array([0.0]), np.array([0.0]))
        self.assertTrue(np.isnan(g2[0]))


if __name__ == "__main__":
    unittest.main(verbosity=2)
