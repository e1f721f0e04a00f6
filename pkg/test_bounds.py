"""
Tests for boundary curves, tangent lines and the certification criteria.
"""
import unittest
import math
import sys
import os

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np

import bounds
import gaussian_model
from models import CorrelationPoint, GaussianParams, DomainError


class TestBoundaryCurves(unittest.TestCase):
    """Test the lower and upper boundary curves."""

    def test_lower_boundary(self):
        self.assertEqual(bounds.lower_boundary_g3(0.0), 4.0)
        self.assertAlmostEqual(bounds.lower_boundary_g3(4.0 / 9.0), 0.0, places=12)
        self.assertAlmostEqual(bounds.lower_boundary_g3(1.0), 1.0)

    def test_upper_boundary(self):
        self.assertEqual(bounds.upper_boundary_g3(0.0), 4.0)
        self.assertAlmostEqual(bounds.upper_boundary_g3(1.0), 25.0)
        self.assertAlmostEqual(bounds.upper_boundary_g3(4.0 / 9.0), 16.0)

    def test_negative_g2(self):
        with self.assertRaises(DomainError):
            bounds.lower_boundary_g3(-0.1)
        with self.assertRaises(DomainError):
            bounds.boundary_curve([0.1, -0.2])

    def test_curve_arrays(self):
        lower, upper = bounds.boundary_curve(np.array([0.0, 1.0]))
        np.testing.assert_allclose(lower, [4.0, 1.0])
        np.testing.assert_allclose(upper, [4.0, 25.0])

    def test_pure_states_inside(self):
        """Test a scan of pure Gaussian states against both curves."""
        alpha, r, theta = gaussian_model.scan_axes(1.0, 1.0, math.pi, (40, 21, 5))
        _, g2, g3 = gaussian_model.correlations_grid(alpha[:, None, None], r[None, :, None], theta[None, None, :])
        lower, upper = bounds.boundary_curve(g2)
        self.assertTrue(np.all(g3 >= lower - 1e-12 * np.maximum(1.0, lower)))
        self.assertTrue(np.all(g3 <= upper + 1e-12 * np.maximum(1.0, upper)))


class TestCriterion(unittest.TestCase):
    """Test √g³ + 3√g² < 2."""

    def test_headline_value(self):
        verdict = bounds.criterion(CorrelationPoint(g2=0.00334, g3=0.0))
        self.assertAlmostEqual(verdict.criterion_value, 0.1734, places=3)
        self.assertTrue(verdict.non_gaussian)
        self.assertTrue(verdict.in_certified_region)

    def test_coherent(self):
        verdict = bounds.criterion(CorrelationPoint(g2=1.0, g3=1.0))
        self.assertEqual(verdict.criterion_value, 4.0)
        self.assertFalse(verdict.non_gaussian)
        self.assertIsNone(verdict.sigma_distance)

    def test_mixture_counterexample(self):
        verdict = bounds.criterion(CorrelationPoint(g2=0.7595, g3=0.1328))
        self.assertAlmostEqual(verdict.criterion_value, 2.979, places=3)
        self.assertFalse(verdict.non_gaussian)
        self.assertFalse(verdict.in_certified_region)

    def test_sigma_propagation(self):
        c = CorrelationPoint(g2=0.04, g3=0.01, g2_sigma=0.004, g3_sigma=0.002)
        expected = math.sqrt((3 * 0.004 / (2 * 0.2)) ** 2 + (0.002 / (2 * 0.1)) ** 2)
        self.assertAlmostEqual(bounds.criterion_sigma(c), expected, places=12)
        verdict = bounds.criterion(c)
        self.assertAlmostEqual(verdict.sigma_distance, (2.0 - verdict.criterion_value) / expected, places=9)

    def test_upper_limit_sigma(self):
        """Test that a flagged upper limit contributes its square root."""
        c = CorrelationPoint(g2=0.0036, g3=0.0, g2_sigma=0.0002, g3_sigma=1.7e-4, g3_is_upper_limit=True)
        expected = math.sqrt((3 * 0.0002 / (2 * 0.06)) ** 2 + 1.7e-4)
        self.assertAlmostEqual(bounds.criterion_sigma(c), expected, places=12)

    def test_no_errors(self):
        self.assertIsNone(bounds.criterion_sigma(CorrelationPoint(g2=0.5, g3=0.5)))


class TestPurePolynomial(unittest.TestCase):
    """Test the non-negative pure-state polynomial."""

    def test_squeezed_vacuum_value(self):
        c, s = math.cosh(0.5), math.sinh(0.5)
        self.assertAlmostEqual(bounds.pure_state_polynomial(0.0, 0.5), 9 * c ** 2 * s ** 6 + 2 * s ** 8, places=14)

    def test_positive(self):
        for alpha, r in ((1.0, 1.0), (0.2, 0.01), (1.5, 0.3), (0.01, 2.0)):
            self.assertGreater(bounds.pure_state_polynomial(alpha, r), 0.0)

    def test_requires_squeezing(self):
        with self.assertRaises(DomainError):
            bounds.pure_state_polynomial(0.5, 0.0)


class TestTangentLines(unittest.TestCase):
    """Test tangents to the lower boundary and the fixed linear bounds."""

    def test_tangent_at_one_ninth(self):
        line = bounds.tangent_at(1.0 / 9.0)
        self.assertAlmostEqual(line.chi2, 9.0, places=12)
        self.assertAlmostEqual(line.chi1, 2.0, places=12)

    def test_tangent_at_zero_crossing(self):
        line = bounds.tangent_at(4.0 / 9.0)
        self.assertAlmostEqual(line.chi2, 0.0, places=12)
        self.assertAlmostEqual(line.chi1, 0.0, places=12)

    def test_tangent_at_one_thirty_sixth(self):
        """Test the intercept χ₁ = 4 - 6√g²."""
        line = bounds.tangent_at(1.0 / 36.0)
        self.assertAlmostEqual(line.chi2, 27.0, places=12)
        self.assertAlmostEqual(line.chi1, 3.0, places=12)

    def test_tangency(self):
        """Test that every tangent touches the curve and stays below it."""
        g2 = np.linspace(0.0, 4.0 / 9.0, 2001)
        lower, _ = bounds.boundary_curve(g2)
        for touch in (0.01, 1.0 / 9.0, 0.2, 0.4):
            line = bounds.tangent_at(touch)
            self.assertAlmostEqual(line.g3_at(touch), bounds.lower_boundary_g3(touch), places=12)
            self.assertTrue(np.all(lower - line.g3_at(g2) >= -1e-12))

    def test_tangent_from_slope(self):
        self.assertAlmostEqual(bounds.tangent_from_slope(9.0).touch_g2, 1.0 / 9.0, places=12)
        with self.assertRaises(DomainError):
            bounds.tangent_from_slope(-1.0)

    def test_out_of_range(self):
        with self.assertRaises(DomainError):
            bounds.tangent_at(0.0)
        with self.assertRaises(DomainError):
            bounds.tangent_at(0.5)

    def test_steepest_linear_bound_gap(self):
        """Test the line g³ + 28g² < 3 sits 1/37 below its parallel tangent."""
        line = bounds.tangent_from_slope(28.0)
        self.assertAlmostEqual(line.chi1 - 3.0, 1.0 / 37.0, places=12)

    def test_linear_bounds_headline(self):
        checks = dict(bounds.linear_bounds_check(CorrelationPoint(g2=0.00334, g3=0.0)))
        self.assertEqual(len(checks), 4)
        self.assertTrue(all(checks.values()))

    def test_linear_bounds_coherent(self):
        checks = dict(bounds.linear_bounds_check(CorrelationPoint(g2=1.0, g3=1.0)))
        self.assertFalse(any(checks.values()))

    def test_linear_bounds_mixed(self):
        checks = dict(bounds.linear_bounds_check(CorrelationPoint(g2=0.1, g3=0.5)))
        self.assertTrue(checks["g3+9g2<2"])
        self.assertTrue(checks["g3+3g2<1"])
        self.assertFalse(checks["g3+g2<2/5"])
        self.assertFalse(checks["g3+28g2<3"])

    def test_joint_cumulant(self):
        self.assertAlmostEqual(bounds.joint_cumulant_g3(CorrelationPoint(g2=1.0, g3=1.0)), 0.0)
        self.assertAlmostEqual(bounds.joint_cumulant_g3(CorrelationPoint(g2=0.00334, g3=0.0)), 1.98998, places=5)
        self.assertAlmostEqual(bounds.joint_cumulant_g3(CorrelationPoint(g2=0.5, g3=0.1)), 0.6)
        self.assertLess(bounds.joint_cumulant_g3(CorrelationPoint(g2=0.9, g3=0.5)), 0.0)


class TestMeanPhotonCriterion(unittest.TestCase):
    """Test the quartic solution and the G⁽²⁾ minimum at fixed mean photon number."""

    def test_quartic_vacuum(self):
        self.assertEqual(bounds.quartic_x(0.0), 1.0)

    def test_quartic_roots(self):
        for n in (0.01, 0.5, 1.0, 10.0, 100.0, 1000.0):
            x = bounds.quartic_x(n)
            self.assertGreaterEqual(x, 1.0)
            self.assertLess(abs(1.0 + x ** 4 - (4 * n + 2) * x), 1e-10 * max(1.0, x ** 4))
        self.assertAlmostEqual(bounds.quartic_x(1.0), 1.75777, places=4)

    def test_quartic_matches_bracketing(self):
        from scipy.optimize import brentq
        for n in (1.0, 10.0):
            ref = brentq(lambda x: 1 + x ** 4 - (4 * n + 2) * x, 1.0, 10.0, xtol=1e-15)
            self.assertAlmostEqual(bounds.quartic_x(n), ref, places=10)

    def test_negative_n(self):
        with self.assertRaises(DomainError):
            bounds.quartic_x(-1.0)
        with self.assertRaises(DomainError):
            bounds.g2_min(0.0)

    def test_g2u_min_values(self):
        self.assertAlmostEqual(bounds.g2u_min_gaussian(0.0), 0.0, places=12)
        g = bounds.g2_min(1.0)
        self.assertGreater(g, 0.0)
        self.assertLess(g, 1.0)
        self.assertAlmostEqual(g, 0.699, places=3)

    def test_g2_min_approaches_one(self):
        values = [bounds.g2_min(n) for n in (1.0, 10.0, 100.0, 1000.0)]
        self.assertTrue(all(b > a for a, b in zip(values, values[1:])))
        self.assertLess(values[-1], 1.0)
        self.assertGreater(values[-1], 0.99)

    def test_minimizer_attains_minimum(self):
        """Test the Lagrange minimizer against a scan over states with ⟨a†a⟩ = 1."""
        alpha2, r = bounds.lagrange_minimizer(1.0)
        at_min = gaussian_model.moments(GaussianParams(alpha_mag=math.sqrt(alpha2), r=r))
        self.assertAlmostEqual(at_min.g1, 1.0, places=10)
        self.assertAlmostEqual(at_min.g2u, bounds.g2u_min_gaussian(1.0), places=9)
        for r_scan in np.linspace(0.0, math.asinh(1.0), 200):
            a2 = 1.0 - math.sinh(r_scan) ** 2
            m = gaussian_model.moments(GaussianParams(alpha_mag=math.sqrt(max(a2, 0.0)), r=r_scan))
            self.assertGreaterEqual(m.g2u, bounds.g2u_min_gaussian(1.0) - 1e-12)

    def test_fock_states_certified(self):
        self.assertTrue(bounds.mean_photon_criterion(1.0, 0.0))
        self.assertFalse(bounds.mean_photon_criterion(1.0, 1.0))
        for n in range(2, 51):
            self.assertTrue(bounds.mean_photon_criterion(float(n), (n - 1.0) / n))


if __name__ == "__main__":
    unittest.main(verbosity=2)
