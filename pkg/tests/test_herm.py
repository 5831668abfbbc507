"""
Тесты для модуля эрмитовой линейной алгебры.
"""

import os
import sys
import unittest

import numpy as np

# Добавляем родительскую директорию в sys.path для импорта модулей приложения
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.app.errors import DimensionMismatchError, InvariantViolationError
from src.app import herm
from src.app.herm import (
    density,
    eig_h,
    from_real_vector,
    hermitian,
    hermitian_basis,
    hs_inner,
    min_eig,
    operator_schmidt,
    partial_trace_A,
    partial_trace_X,
    spectral_norm,
    superoperator_matrix,
    tensor,
    to_real_vector,
)
from src.app.random_models import random_density, random_hermitian, random_unitary
from src.app.settings import settings


class TestHermitianChecks(unittest.TestCase):
    """Проверки эрмитовости и операторов плотности."""

    def test_hermitian_symmetrizes_small_noise(self):
        """Малая антиэрмитова поправка убирается симметризацией."""
        m = np.array([[1.0, 0.5 + 1e-10j], [0.5, 2.0]])
        h = hermitian(m)
        np.testing.assert_allclose(h, h.conj().T)

    def test_hermitian_rejects_large_asymmetry(self):
        """Явно неэрмитова матрица отвергается с именем инварианта."""
        with self.assertRaises(InvariantViolationError) as ctx:
            hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))
        self.assertEqual(ctx.exception.invariant, "hermiticity")

    def test_density_rejects_wrong_trace(self):
        with self.assertRaises(InvariantViolationError) as ctx:
            density(np.eye(2))
        self.assertEqual(ctx.exception.invariant, "unit_trace")
        self.assertAlmostEqual(ctx.exception.residual, 1.0)

    def test_density_rejects_negative_eigenvalue(self):
        with self.assertRaises(InvariantViolationError) as ctx:
            density(np.diag([1.5, -0.5]))
        self.assertEqual(ctx.exception.invariant, "psd")

    def test_non_square_input(self):
        with self.assertRaises(DimensionMismatchError):
            hermitian(np.zeros((2, 3)))


class TestPartialTraces(unittest.TestCase):
    """Частичные следы и тензорное произведение."""

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_partial_traces_of_product(self):
        """Tr_A(rho ⊗ pi) = rho и Tr_X(rho ⊗ pi) = pi для операторов плотности."""
        rho = random_density(3, self.rng)
        pi = random_density(2, self.rng)
        sigma = tensor(rho, pi)
        np.testing.assert_allclose(partial_trace_A(sigma, 3, 2), rho, atol=1e-12)
        np.testing.assert_allclose(partial_trace_X(sigma, 3, 2), pi, atol=1e-12)

    def test_index_convention(self):
        """Индекс (x, a) соответствует x * |A| + a."""
        sigma = tensor(np.diag([1.0, 0.0]), np.diag([0.0, 1.0, 0.0]))
        self.assertEqual(np.argmax(np.diag(sigma).real), 0 * 3 + 1)

    def test_partial_trace_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            partial_trace_A(np.eye(6), 2, 2)


class TestBasisAndCoordinates(unittest.TestCase):
    """Эрмитов базис и вещественные координаты."""

    def test_basis_is_orthonormal(self):
        for dim in (1, 2, 3):
            basis = hermitian_basis(dim)
            self.assertEqual(basis.shape, (dim * dim, dim, dim))
            gram = np.einsum("kij,lji->kl", basis, basis).real
            np.testing.assert_allclose(gram, np.eye(dim * dim), atol=1e-12)

    def test_real_coordinates_reconstruct(self):
        h = random_hermitian(3, np.random.default_rng(3))
        np.testing.assert_allclose(from_real_vector(to_real_vector(h, 3), 3), h, atol=1e-12)

    def test_superoperator_of_identity(self):
        mat = superoperator_matrix(lambda m: m, 2, 2)
        np.testing.assert_allclose(mat, np.eye(4), atol=1e-12)


class TestSpectralHelpers(unittest.TestCase):
    """Собственные значения и нормы."""

    def test_min_eig_and_spectral_norm(self):
        h = np.diag([-3.0, 1.0, 2.0])
        self.assertAlmostEqual(min_eig(h), -3.0)
        self.assertAlmostEqual(spectral_norm(h), 3.0)

    def test_hs_inner_matches_trace(self):
        rng = np.random.default_rng(11)
        a = random_hermitian(3, rng)
        b = random_hermitian(3, rng)
        self.assertAlmostEqual(hs_inner(a, b), float(np.trace(a @ b).real), places=12)

    def test_hs_inner_shape_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            hs_inner(np.eye(2), np.eye(3))

    def test_eig_h_bit_flip(self):
        w, v = eig_h(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(w, [-1.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(v.conj().T @ v, np.eye(2), atol=1e-12)

    def test_eig_h_reconstruction(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            h = random_hermitian(4, rng)
            w, v = eig_h(h)
            self.assertTrue(np.all(np.diff(w) >= 0))
            self.assertLess(np.linalg.norm(v @ np.diag(w) @ v.conj().T - h), 1e-9)
            self.assertLess(np.linalg.norm(v.conj().T @ v - np.eye(4)), 1e-9)

    def test_eig_h_recovers_planted_spectrum(self):
        u = random_unitary(3, np.random.default_rng(18))
        np.testing.assert_allclose(u.conj().T @ u, np.eye(3), atol=1e-12)
        w, _ = eig_h(u @ np.diag([2.0, -1.0, 0.5]) @ u.conj().T)
        np.testing.assert_allclose(w, [-1.0, 0.5, 2.0], atol=1e-12)


class TestTolerances(unittest.TestCase):
    """Допуски берутся из секции tolerances."""

    def test_module_tolerances_follow_settings(self):
        self.assertEqual(herm.TOL_HERM, float(settings.get("tolerances", "herm")))
        self.assertEqual(herm.TOL_PSD, float(settings.get("tolerances", "psd")))
        self.assertEqual(herm.TOL_TRACE, float(settings.get("tolerances", "trace")))


class TestOperatorSchmidt(unittest.TestCase):
    """Операторное разложение Шмидта."""

    def test_product_operator_has_rank_one(self):
        rng = np.random.default_rng(5)
        m = tensor(random_hermitian(2, rng), random_hermitian(3, rng))
        decomposition = operator_schmidt(m, 2, 3)
        self.assertEqual(decomposition.rank, 1)
        np.testing.assert_allclose(decomposition.reconstruct(), m, atol=1e-10)

    def test_reconstruction_of_generic_operator(self):
        m = random_hermitian(6, np.random.default_rng(9))
        decomposition = operator_schmidt(m, 2, 3)
        self.assertLessEqual(decomposition.rank, 4)
        np.testing.assert_allclose(decomposition.reconstruct(), m, atol=1e-10)
        for e_x, e_a in zip(decomposition.left, decomposition.right):
            np.testing.assert_allclose(e_x, e_x.conj().T, atol=1e-12)
            np.testing.assert_allclose(e_a, e_a.conj().T, atol=1e-12)

    def test_zero_operator(self):
        self.assertEqual(operator_schmidt(np.zeros((4, 4)), 2, 2).rank, 0)


if __name__ == "__main__":
    unittest.main()
