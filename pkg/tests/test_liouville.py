import unittest

import numpy as np
import pytest

from app.core.errors import NumericalError
from app.core.liouville import (
    apply_conjugation,
    commutator_superop,
    conjugation_superop,
    decoupled_floquet,
    devectorize,
    dissipative_floquet,
    dissipator_superop,
    eigenphases,
    floquet_spectrum,
    free_generator,
    generator_exponential,
    isolated_eigenphases,
    isolated_floquet,
    matrix_exponential,
    off_block_norm,
    parity_sectors,
    precision_filter,
    sector_dimensions,
    spectrum,
    trace_vector,
    vectorize,
)
from app.core.spin_ops import build_jz, build_parity
from app.models.quantum import ComplexSpectrum, ModelParams


def random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def nearest_distance(a, b):
    """Largest distance from a point of a to its nearest point of b."""
    return float(np.max(np.min(np.abs(a[:, None] - b[None, :]), axis=1)))


class TestVectorization(unittest.TestCase):
    def test_round_trip(self):
        rho = random_hermitian(5, seed=1)
        np.testing.assert_array_equal(devectorize(vectorize(rho)), rho)

    def test_commutator_identity(self):
        """The commutator superoperator acts on vec(rho) as vec([H, rho])"""
        h = random_hermitian(6, seed=2)
        rho = random_hermitian(6, seed=3)
        np.testing.assert_allclose(commutator_superop(h) @ vectorize(rho), vectorize(h @ rho - rho @ h), atol=1e-12)

    def test_jz_commutator_on_basis_element(self):
        """[J_z, |m><m'|] = (m - m')|m><m'|"""
        j = 2
        jz = build_jz(j)
        m = np.arange(-j, j + 1)
        for a in range(5):
            for b in range(5):
                element = np.zeros((5, 5), dtype=complex)
                element[a, b] = 1
                np.testing.assert_allclose(
                    commutator_superop(jz) @ vectorize(element), (m[a] - m[b]) * vectorize(element)
                )

    def test_trace_vector(self):
        rho = random_hermitian(7, seed=4)
        self.assertAlmostEqual(trace_vector(7) @ vectorize(rho), np.trace(rho), places=12)

    def test_devectorize_rejects_non_square_length(self):
        with self.assertRaises(ValueError):
            devectorize(np.zeros(7))

    def test_vectorize_rejects_rectangular(self):
        with self.assertRaises(ValueError):
            vectorize(np.zeros((2, 3)))

    def test_conjugation_lift(self):
        """conjugation_superop(U) maps vec(rho) to vec(U rho U^dagger)"""
        u = matrix_exponential(-1j * random_hermitian(4, seed=5))
        rho = random_hermitian(4, seed=6)
        np.testing.assert_allclose(conjugation_superop(u) @ vectorize(rho), vectorize(u @ rho @ u.conj().T), atol=1e-12)

    def test_apply_conjugation_matches_kronecker_product(self):
        u = matrix_exponential(-1j * random_hermitian(4, seed=7))
        rng = np.random.default_rng(8)
        superop = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        np.testing.assert_allclose(apply_conjugation(u, superop), conjugation_superop(u) @ superop, atol=1e-12)


class TestCommutatorSuperop(unittest.TestCase):
    def test_identity_commutes(self):
        np.testing.assert_array_equal(commutator_superop(np.eye(4)), np.zeros((16, 16)))

    def test_spectrum_is_energy_differences(self):
        h = random_hermitian(5, seed=9)
        energies = np.linalg.eigvalsh(h)
        expected = np.sort((energies[:, None] - energies[None, :]).ravel())
        found = np.sort(np.linalg.eigvals(commutator_superop(h)).real)
        np.testing.assert_allclose(found, expected, atol=1e-9)


class TestDissipator(unittest.TestCase):
    def test_zero_rate(self):
        np.testing.assert_array_equal(dissipator_superop(3, 0.0), np.zeros((49, 49)))

    def test_trace_preserving(self):
        """vec(I) is a left null vector of the dissipator"""
        lam = dissipator_superop(4, 0.3)
        np.testing.assert_allclose(trace_vector(9) @ lam, 0, atol=1e-12)

    def test_ground_state_is_stationary(self):
        lam = dissipator_superop(5, 0.2)
        ground = np.zeros((11, 11), dtype=complex)
        ground[0, 0] = 1
        np.testing.assert_allclose(lam @ vectorize(ground), 0, atol=1e-14)

    def test_rejects_negative_rate(self):
        with self.assertRaises(ValueError):
            dissipator_superop(2, -0.1)


class TestMatrixExponential(unittest.TestCase):
    def test_zero(self):
        np.testing.assert_array_equal(matrix_exponential(np.zeros((6, 6))), np.eye(6))

    def test_diagonal(self):
        a = np.array([0.3, -1.2 + 0.5j, 2.0j, -4.0])
        np.testing.assert_allclose(matrix_exponential(np.diag(a)), np.diag(np.exp(a)), atol=1e-13)

    def test_matches_eigendecomposition(self):
        rng = np.random.default_rng(10)
        m = (rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))) / 10
        values, vectors = np.linalg.eig(m)
        expected = vectors @ np.diag(np.exp(values)) @ np.linalg.inv(vectors)
        np.testing.assert_allclose(matrix_exponential(m), expected, atol=1e-9)

    def test_non_finite_input(self):
        m = np.eye(3)
        m[1, 2] = np.nan
        with self.assertRaises(NumericalError):
            matrix_exponential(m)

    def test_generator_blocks_match_dense_exponential(self):
        """The coherence-block exponential agrees with a dense expm"""
        params = ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=0.1, j=3)
        generator = free_generator(params)
        np.testing.assert_allclose(generator_exponential(generator, 7), matrix_exponential(generator), atol=1e-10)

    def test_generator_with_leakage_is_rejected(self):
        generator = np.zeros((9, 9), dtype=complex)
        generator[0, 1] = 1.0
        with self.assertRaises(NumericalError):
            generator_exponential(generator, 3)


class TestIsolatedFloquet(unittest.TestCase):
    def test_unitary(self):
        f = isolated_floquet(8, 2.0, 10.0, 8.0)
        np.testing.assert_allclose(f.conj().T @ f, np.eye(17), atol=1e-12)

    def test_commutes_with_parity(self):
        f = isolated_floquet(8, 2.0, 10.0, 8.0)
        parity = build_parity(8)
        np.testing.assert_allclose(f @ parity - parity @ f, 0, atol=1e-12)

    def test_pure_precession(self):
        """k0 = k1 = 0 leaves exp(-i p J_z)"""
        p = 1.3
        m = np.arange(-4, 5)
        np.testing.assert_allclose(isolated_floquet(4, p, 0.0, 0.0), np.diag(np.exp(-1j * p * m)), atol=1e-14)

    def test_isolated_eigenphases_sectors(self):
        phases = isolated_eigenphases(10, 2.0, 10.0, 8.0, "positive")
        self.assertEqual(len(phases), 11)
        self.assertTrue(np.all(np.diff(phases) >= 0))
        self.assertEqual(len(isolated_eigenphases(10, 2.0, 10.0, 8.0, "full")), 21)


class TestDissipativeFloquet(unittest.TestCase):
    def setUp(self):
        self.params = ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=0.1, j=5)
        self.superop = dissipative_floquet(self.params)

    def test_trace_preserving(self):
        np.testing.assert_allclose(trace_vector(11) @ self.superop, trace_vector(11), atol=1e-10)

    def test_decoupled_trace_preserving(self):
        np.testing.assert_allclose(trace_vector(11) @ decoupled_floquet(self.params), trace_vector(11), atol=1e-10)

    def test_contraction_and_steady_state(self):
        values = spectrum(self.superop).eigenvalues
        self.assertLessEqual(np.max(np.abs(values)), 1 + 1e-10)
        self.assertEqual(np.count_nonzero(np.abs(values - 1) < 1e-10), 1)

    def test_steady_state_in_positive_sector(self):
        positive = spectrum(self.superop, 5, "positive").eigenvalues
        negative = spectrum(self.superop, 5, "negative").eigenvalues
        self.assertEqual(np.count_nonzero(np.abs(positive - 1) < 1e-10), 1)
        self.assertEqual(np.count_nonzero(np.abs(negative - 1) < 1e-10), 0)

    def test_conjugation_symmetry(self):
        values = spectrum(self.superop).eigenvalues
        self.assertLess(nearest_distance(values, values.conj()), 1e-9)

    def test_without_kick(self):
        """k1 = 0 leaves only the inter-kick exponential"""
        params = ModelParams(p=2.0, k0=10.0, k1=0.0, gamma=0.1, j=3)
        np.testing.assert_allclose(
            dissipative_floquet(params), matrix_exponential(free_generator(params)), atol=1e-10
        )

    def test_unitary_limit(self):
        params = ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=0.0, j=5)
        spec = spectrum(dissipative_floquet(params))
        np.testing.assert_allclose(np.abs(spec.eigenvalues), 1, atol=1e-10)
        np.testing.assert_allclose(spec.eigenphases.real, 0, atol=1e-10)

    def test_decoupled_equals_exact_without_dissipation(self):
        params = ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=0.0, j=4)
        np.testing.assert_allclose(decoupled_floquet(params), dissipative_floquet(params), atol=1e-12)

    def test_splitting_error_is_first_order(self):
        """||D - D~|| / ||D|| halves with the dissipation strength"""
        errors = []
        gammas = [1e-3, 2e-3, 4e-3]
        for gamma in gammas:
            params = ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=gamma, j=4)
            exact = dissipative_floquet(params)
            errors.append(np.linalg.norm(exact - decoupled_floquet(params)) / np.linalg.norm(exact))
        order = np.polyfit(np.log(gammas), np.log(errors), 1)[0]
        self.assertAlmostEqual(order, 1.0, delta=0.2)

    def test_decoupled_spectrum_conjugate_without_torsion(self):
        """At k0 = 0 the precession commutes with the dissipator and both propagators share a spectrum"""
        params = ModelParams(p=2.0, k0=0.0, k1=8.0, gamma=0.1, j=3)
        exact = spectrum(dissipative_floquet(params)).eigenvalues
        decoupled = spectrum(decoupled_floquet(params)).eigenvalues
        self.assertLess(nearest_distance(exact, decoupled), 1e-6)
        self.assertLess(nearest_distance(decoupled, exact), 1e-6)

    def test_weak_dissipation_continuity(self):
        base = dissipative_floquet(ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=0.0, j=3))
        gaps = []
        for gamma in (1e-3, 1e-2):
            shifted = dissipative_floquet(ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=gamma, j=3))
            gaps.append(np.linalg.norm(shifted - base))
        self.assertAlmostEqual(gaps[1] / gaps[0], 10.0, delta=2.0)


class TestParitySectors(unittest.TestCase):
    def test_dimensions(self):
        self.assertEqual(sector_dimensions(10), (221, 220))
        self.assertEqual(sector_dimensions(80)[0], 12961)

    def test_blocks_from_floquet_operator(self):
        params = ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=0.1, j=10)
        superop = dissipative_floquet(params)
        self.assertLess(off_block_norm(superop, 10), 1e-12)
        positive, negative = parity_sectors(superop, 10)
        self.assertEqual(positive.shape, (221, 221))
        self.assertEqual(negative.shape, (220, 220))

    def test_union_of_blocks_is_full_spectrum(self):
        params = ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=0.1, j=4)
        superop = dissipative_floquet(params)
        full = spectrum(superop).eigenvalues
        blocks = np.concatenate([spectrum(superop, 4, s).eigenvalues for s in ("positive", "negative")])
        self.assertEqual(len(blocks), len(full))
        self.assertLess(nearest_distance(full, blocks), 1e-9)
        self.assertLess(nearest_distance(blocks, full), 1e-9)

    def test_broken_symmetry_is_detected(self):
        superop = np.eye(9, dtype=complex)
        superop[0, 1] = 1.0
        with self.assertRaises(NumericalError):
            parity_sectors(superop, 1)

    def test_size_mismatch(self):
        with self.assertRaises(ValueError):
            parity_sectors(np.eye(16), 1)


class TestSpectrum(unittest.TestCase):
    def test_principal_branch(self):
        phases = eigenphases(np.array([-1.0 + 0j, 1j, -1j]))
        np.testing.assert_allclose(phases.imag, [np.pi, np.pi / 2, -np.pi / 2])

    def test_sector_requires_spin(self):
        with self.assertRaises(ValueError):
            spectrum(np.eye(4), sector="positive")

    def test_non_finite_block(self):
        with self.assertRaises(NumericalError):
            spectrum(np.full((4, 4), np.inf))

    def test_branch_cut_count(self):
        values = np.array([-1 + 5e-9j, 0.5, -1 + 1e-6j, -1 - 5e-9j, 1 + 1e-12j])
        with self.assertLogs("app.core.liouville", level="WARNING") as logs:
            spec = spectrum(np.diag(values))
        self.assertEqual(spec.n_branch_cut, 2)
        self.assertIn("negative real axis", logs.output[0])

    def test_precision_filter(self):
        spec = ComplexSpectrum(eigenvalues=[1.0, 0.5, 1e-20, 0.0], eigenphases=eigenphases([1.0, 0.5, 1e-20, 1e-300]))
        kept, fraction = precision_filter(spec, 1e-16)
        self.assertEqual(len(kept), 2)
        self.assertEqual(kept.n_filtered, 2)
        self.assertEqual(fraction, 0.5)

    def test_precision_filter_rejects_bad_epsilon(self):
        spec = ComplexSpectrum(eigenvalues=[1.0], eigenphases=[0.0])
        with self.assertRaises(ValueError):
            precision_filter(spec, 0.0)


@pytest.mark.parametrize("gamma", [0.0, 0.1])
def test_floquet_spectrum_keeps_positive_sector(gamma):
    params = ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=gamma, j=10)
    spec, fraction = floquet_spectrum(params)
    assert spec.parity_sector == "positive"
    assert len(spec) == 221
    assert fraction == 0.0
    assert np.max(np.abs(spec.eigenvalues)) <= 1 + 1e-10


def test_floquet_spectrum_unknown_variant():
    with pytest.raises(ValueError):
        floquet_spectrum(ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=0.1, j=2), variant="split")


def test_filter_keeps_everything_at_moderate_damping():
    spec, fraction = floquet_spectrum(ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=1.0, j=10))
    assert fraction == 0.0
    assert spec.n_filtered == 0


@pytest.mark.slow
def test_filtered_fraction_grows_with_damping():
    fractions = [floquet_spectrum(ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=gamma, j=20))[1]
                 for gamma in (2.0, 4.0, 6.0)]
    assert fractions == sorted(fractions)
    assert fractions[-1] > 0.0


@pytest.mark.slow
def test_filter_keeps_everything_at_weak_damping_largest_spin():
    _, fraction = floquet_spectrum(ModelParams(p=2.0, k0=10.0, k1=8.0, gamma=0.1, j=30))
    assert fraction == 0.0


if __name__ == '__main__':
    unittest.main()
