import unittest

import numpy as np
import pytest
import scipy.integrate

from app.core.classical import chaotic_fraction
from app.core.constants import NEG_COS_2DP, NEG_COS_GINUE, R_2DP, R_COE, R_GINUE, R_POISSON, S_BAR_GINUE
from app.core.liouville import floquet_spectrum
from app.core.spectral_stats import (
    complex_spacing_ratios,
    ginue_first_moment,
    ginue_pdf,
    ginue_pdf_rescaled,
    isolated_ratio_statistics,
    merge_duplicates,
    normalized_complex_metrics,
    normalized_real_ratio,
    oracle_statistics,
    poisson2d_pdf,
    pooled_ratio_statistics,
    ratio_statistics,
    real_spacing_ratios,
    sample_coe_eigenphases,
    sample_ginibre_spectrum,
    sample_poisson2d,
    sample_uniform_phases,
)
from app.models.classical import ClassicalParams
from app.models.quantum import ModelParams, OracleRequest, RatioSample


class TestComplexSpacingRatios(unittest.TestCase):
    def test_equidistant_neighbours_go_to_lower_index(self):
        """With two neighbours at the same distance the lower index is the nearest one"""
        sample = complex_spacing_ratios([0, 1, -1])
        np.testing.assert_allclose(sample.r, [1.0, 0.5, 0.5])
        np.testing.assert_allclose(sample.theta, [np.pi, 0.0, 0.0], atol=1e-15)

    def test_ratio_moduli_bounded(self):
        sample = complex_spacing_ratios(sample_poisson2d(200, seed=3))
        self.assertEqual(len(sample), 200)
        self.assertTrue(np.all(sample.r <= 1.0))
        self.assertTrue(np.all(sample.r > 0.0))
        self.assertTrue(np.all((sample.theta > -np.pi) & (sample.theta <= np.pi)))

    def test_kdtree_matches_exhaustive(self):
        points = sample_ginibre_spectrum(300, seed=11)
        exhaustive = complex_spacing_ratios(points)
        tree = complex_spacing_ratios(points, method="kdtree")
        np.testing.assert_array_equal(tree.r, exhaustive.r)
        np.testing.assert_array_equal(tree.theta, exhaustive.theta)

    def test_three_point_example(self):
        sample = complex_spacing_ratios([0, 1, 3j])
        self.assertAlmostEqual(sample.r[0], 1 / 3)
        self.assertAlmostEqual(sample.theta[0], -np.pi / 2)

    def test_invariant_under_affine_maps(self):
        points = sample_poisson2d(300, seed=5)
        base = complex_spacing_ratios(points)
        for a, b in ((2.5 * np.exp(0.7j), 3 - 1j), (1e-3j, 0.0), (-40.0, 1e3 + 1e3j)):
            moved = complex_spacing_ratios(a * points + b)
            np.testing.assert_allclose(moved.r, base.r, atol=1e-10)
            np.testing.assert_allclose(np.exp(1j * moved.theta), np.exp(1j * base.theta), atol=1e-10)

    def test_mirror_images_have_opposite_angles(self):
        upper = sample_poisson2d(100, seed=9) + 0.05j
        sample = complex_spacing_ratios(np.concatenate([upper, upper.conj()]))
        np.testing.assert_allclose(sample.r[:100], sample.r[100:], atol=1e-12)
        np.testing.assert_allclose(np.sin(sample.theta[:100]), -np.sin(sample.theta[100:]), atol=1e-12)
        np.testing.assert_allclose(np.cos(sample.theta[:100]), np.cos(sample.theta[100:]), atol=1e-12)

    def test_kdtree_ties_on_a_ring(self):
        """Twelve lattice points at distance 5 from the origin: every order gives the exhaustive answer"""
        ring = [5, -5, 5j, -5j, 3 + 4j, 3 - 4j, -3 + 4j, -3 - 4j, 4 + 3j, 4 - 3j, -4 + 3j, -4 - 3j]
        points = np.array([0] + ring, dtype=complex)
        for seed in range(20):
            shuffled = np.random.default_rng(seed).permutation(points)
            exhaustive = complex_spacing_ratios(shuffled)
            tree = complex_spacing_ratios(shuffled, method="kdtree")
            np.testing.assert_array_equal(tree.r, exhaustive.r)
            np.testing.assert_array_equal(tree.theta, exhaustive.theta)

    def test_unknown_method(self):
        with self.assertRaises(ValueError):
            complex_spacing_ratios([0, 1, 2j, 3], method="brute")

    def test_too_few_points(self):
        with self.assertRaises(ValueError):
            complex_spacing_ratios([0, 1])

    def test_duplicates_are_merged(self):
        points, n_merged = merge_duplicates(np.array([0, 1e-16, 1, 2j]))
        self.assertEqual(n_merged, 1)
        np.testing.assert_array_equal(points, [0, 1, 2j])
        sample = complex_spacing_ratios([0, 1e-16, 1, 2j, 3 + 1j])
        self.assertEqual(sample.n_merged, 1)
        self.assertEqual(len(sample), 4)


class TestRatioStatistics(unittest.TestCase):
    def test_normalized_metrics_references(self):
        self.assertEqual(normalized_complex_metrics(R_2DP, 0.0), (0.0, 0.0))
        r_c, theta_c = normalized_complex_metrics(R_GINUE, NEG_COS_GINUE)
        self.assertAlmostEqual(r_c, 1.0, places=12)
        self.assertAlmostEqual(theta_c, 1.0, places=12)

    def test_small_sample_has_no_normalized_metrics(self):
        """Below 50 ratios R_c and Theta_c stay unset"""
        stats = ratio_statistics(RatioSample(r=np.full(10, 0.7), theta=np.zeros(10)))
        self.assertAlmostEqual(stats.mean_r, 0.7)
        self.assertAlmostEqual(stats.mean_neg_cos, -1.0)
        self.assertIsNone(stats.R_c)
        self.assertIsNone(stats.Theta_c)

    def test_empty_sample(self):
        with self.assertRaises(ValueError):
            ratio_statistics(RatioSample(r=[], theta=[]))

    def test_pooling(self):
        a = RatioSample(r=np.full(30, 0.5), theta=np.zeros(30))
        b = RatioSample(r=np.full(30, 1.0), theta=np.full(30, np.pi), n_merged=2)
        stats = pooled_ratio_statistics([a, b])
        self.assertEqual(stats.n_samples, 60)
        self.assertAlmostEqual(stats.mean_r, 0.75)
        self.assertAlmostEqual(stats.mean_neg_cos, 0.0)
        self.assertIsNotNone(stats.R_c)


class TestReferenceDensities(unittest.TestCase):
    def test_ginue_normalized(self):
        total, _ = scipy.integrate.quad(ginue_pdf, 0, 12, limit=200)
        self.assertAlmostEqual(total, 1.0, places=5)

    def test_ginue_first_moment(self):
        self.assertAlmostEqual(ginue_first_moment(), S_BAR_GINUE, delta=1e-3)

    def test_ginue_cubic_repulsion(self):
        """P(s) grows as s^3 near the origin"""
        s = np.array([1e-3, 1e-2])
        slope = np.diff(np.log(ginue_pdf(s)))[0] / np.diff(np.log(s))[0]
        self.assertAlmostEqual(slope, 3.0, delta=0.01)

    def test_ginue_edges(self):
        self.assertEqual(ginue_pdf(0.0), 0.0)
        self.assertEqual(ginue_pdf(30.0), 0.0)
        with self.assertRaises(ValueError):
            ginue_pdf(-0.1)

    def test_rescaled_density_has_unit_mean(self):
        mean, _ = scipy.integrate.quad(lambda x: x * ginue_pdf_rescaled(x), 0, 12, limit=200)
        self.assertAlmostEqual(mean, 1.0, places=4)

    def test_poisson2d_density(self):
        total, _ = scipy.integrate.quad(poisson2d_pdf, 0, np.inf)
        mean, _ = scipy.integrate.quad(lambda x: x * poisson2d_pdf(x), 0, np.inf)
        self.assertAlmostEqual(total, 1.0, places=8)
        self.assertAlmostEqual(mean, 1.0, places=8)


class TestRealRatios(unittest.TestCase):
    def test_min_over_max(self):
        np.testing.assert_allclose(real_spacing_ratios([3.0, 0.0, 1.0]), [0.5])

    def test_degenerate_pair_is_dropped(self):
        np.testing.assert_allclose(real_spacing_ratios([0.0, 1.0, 1.0, 1.0, 2.0]), [0.0, 0.0])

    def test_normalized_real_ratio(self):
        self.assertAlmostEqual(normalized_real_ratio(R_POISSON), 0.0)
        self.assertAlmostEqual(normalized_real_ratio(R_COE), 1.0)
        with self.assertRaises(ValueError):
            normalized_real_ratio(1.5)

    def test_uniform_phases_are_poissonian(self):
        ratios = np.concatenate([real_spacing_ratios(sample_uniform_phases(2000, seed)) for seed in range(3)])
        self.assertAlmostEqual(np.mean(ratios), R_POISSON, delta=0.02)

    def test_coe_phases(self):
        ratios = np.concatenate([real_spacing_ratios(sample_coe_eigenphases(600, seed)) for seed in range(3)])
        self.assertAlmostEqual(np.mean(ratios), R_COE, delta=0.025)

    def test_isolated_statistics_pool_both_sectors(self):
        stats = isolated_ratio_statistics(20, 2.0, 10.0, 8.0)
        # 21 + 20 phases give 19 + 18 ratios
        self.assertEqual(stats.n_samples, 37)
        self.assertTrue(0.0 < stats.mean_r < 1.0)


class TestSamplers(unittest.TestCase):
    def test_minimum_size(self):
        for sampler in (sample_ginibre_spectrum, sample_poisson2d, sample_uniform_phases, sample_coe_eigenphases):
            with self.assertRaises(ValueError):
                sampler(8, 0)

    def test_seeded(self):
        np.testing.assert_array_equal(sample_poisson2d(50, 4), sample_poisson2d(50, 4))
        self.assertFalse(np.array_equal(sample_poisson2d(50, 4), sample_poisson2d(50, 5)))

    def test_poisson2d_in_unit_square(self):
        points = sample_poisson2d(500, 1)
        self.assertTrue(np.all((points.real >= 0) & (points.real < 1)))
        self.assertTrue(np.all((points.imag >= 0) & (points.imag < 1)))

    def test_circular_law(self):
        """Ginibre eigenvalues scaled by sqrt(n) fill the unit disk uniformly"""
        n = 600
        radii = np.abs(sample_ginibre_spectrum(n, seed=2)) / np.sqrt(n)
        for radius in (0.25, 0.5, 0.75):
            self.assertAlmostEqual(np.mean(radii < radius), radius ** 2, delta=0.03)
        self.assertGreater(np.mean(radii < 1.1), 0.99)


def test_poisson2d_oracle():
    result = oracle_statistics(OracleRequest(ensemble="poisson2d", n=1000, seed=1, n_seeds=3))
    assert result["ensemble"] == "poisson2d"
    assert result["n_samples"] == 3000
    assert result["reference_r"] == R_2DP
    assert abs(result["mean_r"] - R_2DP) < 0.02
    assert abs(result["mean_neg_cos"]) < 0.04
    assert abs(result["R_c"]) < 0.3


def test_ginue_oracle_small():
    result = oracle_statistics(OracleRequest(ensemble="ginue", n=800, seed=7, n_seeds=2))
    assert abs(result["mean_r"] - R_GINUE) < 0.03
    assert abs(result["mean_neg_cos"] - NEG_COS_GINUE) < 0.07


def test_real_oracle_keys():
    result = oracle_statistics(OracleRequest(ensemble="poisson", n=500, seed=2))
    assert set(result) == {"ensemble", "mean_r", "r_c", "reference_r", "n_samples"}
    assert result["reference_r"] == R_POISSON


def test_oracle_request_validation():
    with pytest.raises(ValueError):
        OracleRequest(ensemble="gue")
    with pytest.raises(ValueError):
        OracleRequest(n_seeds=0)


@pytest.mark.slow
def test_ginue_oracle_reference():
    """Five pooled 2000 x 2000 Ginibre spectra reproduce <r> = 0.74 and <-cos theta> = 0.24"""
    result = oracle_statistics(OracleRequest(ensemble="ginue", n=2000, seed=7, n_seeds=5))
    assert abs(result["mean_r"] - R_GINUE) < 0.01
    assert abs(result["mean_neg_cos"] - NEG_COS_GINUE) < 0.02
    assert abs(result["R_c"] - 1.0) < 0.15


def floquet_ratio_statistics(**model):
    spec, _ = floquet_spectrum(ModelParams(**model))
    return ratio_statistics(complex_spacing_ratios(spec.eigenphases))


@pytest.mark.slow
def test_weak_kick_follows_2d_poisson():
    stats = floquet_ratio_statistics(p=2.0, k0=10.0, k1=1e-3, gamma=0.1, j=30)
    assert abs(stats.mean_r - R_2DP) < 0.03
    assert abs(stats.mean_neg_cos - NEG_COS_2DP) < 0.05


@pytest.mark.slow
def test_strong_kick_follows_ginue():
    stats = floquet_ratio_statistics(p=2.0, k0=10.0, k1=8.0, gamma=0.1, j=30)
    assert abs(stats.mean_r - R_GINUE) < 0.03
    assert abs(stats.mean_neg_cos - NEG_COS_GINUE) < 0.05


@pytest.mark.slow
def test_regular_classics_with_chaotic_spectrum():
    """At strong damping the spectrum looks GinUE while the classical attractors are regular"""
    stats = floquet_ratio_statistics(p=2.0, k0=10.0, k1=1.0, gamma=0.4, j=30)
    assert 0.70 <= stats.mean_r <= 0.75
    assert chaotic_fraction(ClassicalParams(p=2.0, k0=10.0, k1=1.0, gamma=0.4)) <= 0.1


@pytest.mark.slow
@pytest.mark.parametrize("k1,expected,tolerance", [(1e-3, 0.0, 0.15), (8.0, 1.0, 0.1)])
def test_isolated_large_spin_limits(k1, expected, tolerance):
    stats = isolated_ratio_statistics(512, 2.0, 10.0, k1)
    assert abs(stats.r_c - expected) < tolerance


if __name__ == '__main__':
    unittest.main()
