"""
Тесты для билинейных формулировок и метода Франк-Вульфа.
"""

import os
import sys
import unittest

import numpy as np

# Добавляем родительскую директорию в sys.path для импорта модулей приложения
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.app import conic
from src.app.classical import embed_to_qmdp, value_iteration
from src.app.herm import hs_inner
from src.app.qsolve.bilinear import (
    BilinearOptions,
    closed_loop_value,
    frank_wolfe,
    open_loop_objective,
    open_loop_value,
    solve_bil_closed,
    solve_bil_open,
)
from src.app.qsolve.instance import OpenLoopPolicy
from src.app.qsolve.occupation import evaluate_stationary
from src.app.qsolve.sdp import solve_sdp_open
from src.app.random_models import random_classical_mdp, random_csp_policy, random_density, random_qmdp

OPTIONS = BilinearOptions(max_outer=60, tol=1e-8, restarts=2, seed=11)


class TestFrankWolfe(unittest.TestCase):
    """Метод условного градиента на симплексе."""

    def test_quadratic_on_simplex(self):
        target = np.array([0.3, 0.3, 0.4])

        def linearize(x):
            grad = 2.0 * (x - target)
            vertex = np.eye(3)[int(np.argmin(grad))]
            return float(np.sum((x - target) ** 2)), vertex, float(grad @ (x - vertex))

        run = frank_wolfe(
            np.array([1.0, 0.0, 0.0]),
            objective=lambda x: float(np.sum((x - target) ** 2)),
            linearize=linearize,
            combine=lambda x, v, t: (1.0 - t) * x + t * v,
            max_outer=200,
            tol=1e-9,
        )
        self.assertLessEqual(run.value, 1e-4)
        self.assertEqual(run.history, sorted(run.history, reverse=True))

    def test_vertex_optimum_stops_immediately(self):
        run = frank_wolfe(
            np.array([1.0, 0.0]),
            objective=lambda x: float(x[1]),
            linearize=lambda x: (float(x[1]), np.array([1.0, 0.0]), float(x[1])),
            combine=lambda x, v, t: (1.0 - t) * x + t * v,
            max_outer=10,
            tol=1e-12,
        )
        self.assertTrue(run.converged)
        self.assertEqual(run.iterations, 1)


class TestOpenLoop(unittest.TestCase):
    """(BIL): стационарные открытые политики."""

    def setUp(self):
        self.rng = np.random.default_rng(101)

    def test_objective_matches_stationary_evaluation(self):
        q = random_qmdp(2, 2, 0.7, self.rng)
        pi = random_density(2, self.rng)
        self.assertAlmostEqual(open_loop_value(q, pi), evaluate_stationary(q, OpenLoopPolicy.stationary(pi)), delta=1e-10)

    def test_gradient_matches_finite_differences(self):
        q = random_qmdp(2, 3, 0.8, self.rng)
        pi = random_density(3, self.rng)
        _, grad = open_loop_objective(q, pi)
        eps = 1e-5
        for _ in range(20):
            direction = random_density(3, self.rng) - random_density(3, self.rng)
            numeric = (open_loop_value(q, pi + eps * direction) - open_loop_value(q, pi - eps * direction)) / (2 * eps)
            analytic = hs_inner(grad, direction)
            self.assertAlmostEqual(numeric, analytic, delta=1e-5 * max(1.0, abs(analytic)))

    def test_value_above_sdp_bound(self):
        for beta in (0.5, 0.9):
            q = random_qmdp(2, 2, beta, self.rng)
            report = solve_bil_open(q, OPTIONS)
            self.assertGreaterEqual(report.primal_value, solve_sdp_open(q).primal_value - 1e-6)
            self.assertAlmostEqual(report.rollout_value, report.primal_value,
                                   delta=report.details["rollout"]["cost_tail_bound"] + 1e-8)

    def test_single_action_matches_sdp(self):
        """При |A| = 1 выбора нет: pi = 1 и J совпадает со значением (SDP)."""
        q = random_qmdp(2, 1, 0.7, self.rng)
        report = solve_bil_open(q, OPTIONS)
        self.assertEqual(report.status, conic.OPTIMAL)
        np.testing.assert_allclose(report.extracted_policy.tail, np.ones((1, 1)), atol=1e-12)
        self.assertAlmostEqual(report.primal_value, solve_sdp_open(q).primal_value, delta=1e-6)

    def test_deterministic(self):
        q = random_qmdp(2, 2, 0.6, self.rng)
        first = solve_bil_open(q, OPTIONS)
        second = solve_bil_open(q, OPTIONS)
        self.assertEqual(first.primal_value, second.primal_value)
        self.assertEqual(first.details["restart_values"], second.details["restart_values"])


class TestClosedLoop(unittest.TestCase):
    """(BIL-w): стационарные CSP-политики."""

    def setUp(self):
        self.rng = np.random.default_rng(202)

    def test_classical_instances_match_value_iteration(self):
        for nx, na, beta in [(2, 2, 0.5), (2, 3, 0.9)]:
            mdp = random_classical_mdp(nx, na, beta, self.rng)
            q = embed_to_qmdp(mdp)
            expected = (1.0 - beta) * float(np.mean(value_iteration(mdp, tol=1e-11).v))
            report = solve_bil_closed(q, OPTIONS)
            self.assertAlmostEqual(report.primal_value, expected, delta=1e-5)
            self.assertGreaterEqual(report.primal_value, report.dual_value - 1e-6)

    def test_value_matches_stationary_evaluation(self):
        q = random_qmdp(2, 2, 0.7, self.rng)
        policy = random_csp_policy(2, 2, self.rng)
        self.assertAlmostEqual(closed_loop_value(q, policy), evaluate_stationary(q, policy), delta=1e-10)

    def test_status_values(self):
        q = embed_to_qmdp(random_classical_mdp(2, 2, 0.5, self.rng))
        report = solve_bil_closed(q, OPTIONS)
        self.assertIn(report.status, (conic.OPTIMAL, "stationary", conic.MAX_ITER))
        self.assertEqual(report.extracted_policy.dim_x, 2)


if __name__ == "__main__":
    unittest.main()
