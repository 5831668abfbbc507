"""
Тесты для решателя полуопределенных задач.
"""

import os
import sys
import unittest

import numpy as np

# Добавляем родительскую директорию в sys.path для импорта модулей приложения
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.app import conic
from src.app.errors import DimensionMismatchError
from src.app.herm import min_eig
from src.app.random_models import random_hermitian


class TestSolve(unittest.TestCase):
    """Решение небольших SDP с известным ответом."""

    def test_min_eigenvalue_problem(self):
        """min <C, X> при Tr X = 1 равен lambda_min(C)."""
        c = random_hermitian(3, np.random.default_rng(1))
        problem = conic.SdpProblem(dim=3, objective=c, constraints=((np.eye(3), 1.0),))
        solution = conic.solve(problem, tol=1e-9)

        self.assertEqual(solution.status, conic.OPTIMAL)
        self.assertAlmostEqual(solution.primal_obj, min_eig(c), delta=1e-7)
        self.assertAlmostEqual(solution.dual_obj, min_eig(c), delta=1e-7)
        self.assertAlmostEqual(float(np.trace(solution.x).real), 1.0, delta=1e-7)
        self.assertGreater(min_eig(solution.x), -1e-8)

    def test_diagonal_lp(self):
        """Диагональная задача - ЛП: min x1 + 2 x2 при x1 + x2 = 1."""
        problem = conic.SdpProblem(dim=2, objective=np.diag([1.0, 2.0]), constraints=((np.eye(2), 1.0),))
        solution = conic.solve(problem)
        self.assertEqual(solution.status, conic.OPTIMAL)
        self.assertAlmostEqual(solution.primal_obj, 1.0, delta=1e-7)
        np.testing.assert_allclose(np.diag(solution.x).real, [1.0, 0.0], atol=1e-6)

    def test_redundant_constraints(self):
        """Повторное ограничение отбрасывается, множители остаются согласованными."""
        c = np.diag([2.0, 3.0])
        problem = conic.SdpProblem(dim=2, objective=c, constraints=((np.eye(2), 1.0), (np.eye(2), 1.0)))
        solution = conic.solve(problem)
        self.assertEqual(solution.status, conic.OPTIMAL)
        self.assertEqual(solution.y.shape, (2,))
        self.assertAlmostEqual(float(solution.y.sum()), 2.0, delta=1e-7)

    def test_inconsistent_constraints(self):
        problem = conic.SdpProblem(dim=2, objective=np.eye(2), constraints=((np.eye(2), 1.0), (np.eye(2), 2.0)))
        solution = conic.solve(problem)
        self.assertEqual(solution.status, conic.INFEASIBLE)

    def test_negative_trace_is_infeasible(self):
        """X ⪰ 0 с Tr X = -1 недопустима."""
        problem = conic.SdpProblem(dim=2, objective=np.eye(2), constraints=((np.eye(2), -1.0),))
        solution = conic.solve(problem, max_iter=100)
        self.assertEqual(solution.status, conic.INFEASIBLE)

    def test_unconstrained_psd_objective(self):
        """Без ограничений и при C ⪰ 0 оптимум X = 0."""
        problem = conic.SdpProblem(dim=2, objective=np.eye(2))
        solution = conic.solve(problem)
        self.assertEqual(solution.status, conic.OPTIMAL)
        self.assertEqual(solution.primal_obj, 0.0)
        self.assertEqual(solution.y.shape, (0,))
        np.testing.assert_array_equal(solution.x, np.zeros((2, 2)))

    def test_unconstrained_indefinite_objective(self):
        problem = conic.SdpProblem(dim=2, objective=-np.eye(2))
        solution = conic.solve(problem)
        self.assertEqual(solution.status, conic.UNBOUNDED)
        self.assertEqual(solution.primal_obj, -np.inf)


    def test_complex_constraint(self):
        """Комплексное эрмитово ограничение: <B, X> = 0 для антисимметричного B."""
        b = np.array([[0.0, 1j], [-1j, 0.0]]) / np.sqrt(2)
        c = np.array([[1.0, 0.5j], [-0.5j, 1.0]])
        problem = conic.SdpProblem(dim=2, objective=c, constraints=((np.eye(2), 1.0), (b, 0.0)))
        solution = conic.solve(problem)
        self.assertEqual(solution.status, conic.OPTIMAL)
        self.assertAlmostEqual(float(np.vdot(b, solution.x).real), 0.0, delta=1e-7)
        self.assertLessEqual(solution.gap, 1e-7)


class TestRealEmbedding(unittest.TestCase):
    """Вещественное вложение эрмитовых матриц."""

    def test_pauli_y(self):
        y = np.array([[0.0, -1j], [1j, 0.0]])
        real = conic.herm_to_real(y)
        self.assertEqual(real.shape, (4, 4))
        np.testing.assert_allclose(real, real.T, atol=0)
        np.testing.assert_allclose(np.linalg.eigvalsh(real), [-1.0, -1.0, 1.0, 1.0], atol=1e-12)

    def test_back_projection(self):
        h = random_hermitian(3, np.random.default_rng(4))
        np.testing.assert_allclose(conic.real_to_herm(conic.herm_to_real(h), 3), h, atol=1e-14)


class TestProblemValidation(unittest.TestCase):
    """Проверка входных данных SDP."""

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            conic.SdpProblem(dim=3, objective=np.eye(2))

    def test_options_from_settings_with_override(self):
        options = conic.SolverOptions.from_settings(tol=1e-6)
        self.assertEqual(options.tol, 1e-6)
        self.assertGreater(options.max_iter, 0)


if __name__ == "__main__":
    unittest.main()
