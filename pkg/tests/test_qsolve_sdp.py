"""
Тесты для SDP-формулировок q-MDP.
"""

import dataclasses
import os
import sys
import unittest

import numpy as np

# Добавляем родительскую директорию в sys.path для импорта модулей приложения
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.app import conic
from src.app.channel import csp_membership
from src.app.classical import embed_to_qmdp, value_iteration
from src.app.errors import DimensionMismatchError
from src.app.herm import basis_projector, hermitian_basis
from src.app.qsolve.instance import OpenLoopPolicy, op_T, op_Tw
from src.app.qsolve.occupation import rollout
from src.app.qsolve.sdp import build_sdp_closed, build_sdp_open, min_over_csp_policies, solve_sdp_closed, solve_sdp_open
from src.app.random_models import random_classical_mdp, random_csp_policy, random_density, random_qmdp


class TestClassicalEquivalence(unittest.TestCase):
    """(SDP-w) на вложенных классических MDP совпадает с итерацией по ценности."""

    def test_closed_sdp_matches_value_iteration(self):
        rng = np.random.default_rng(2023)
        cases = [(2, 2, 0.5), (2, 3, 0.9), (3, 2, 0.9), (3, 3, 0.5), (2, 2, 0.9)]
        for nx, na, beta in cases:
            mdp = random_classical_mdp(nx, na, beta, rng)
            v_star = value_iteration(mdp, tol=1e-11).v
            q = embed_to_qmdp(mdp)
            for x in range(nx):
                report = solve_sdp_closed(q.with_rho0(basis_projector(nx, x)))
                self.assertEqual(report.status, conic.OPTIMAL)
                self.assertAlmostEqual(report.primal_value / (1.0 - beta), v_star[x], delta=1e-5)


class TestStrongDuality(unittest.TestCase):
    """Нулевой зазор двойственности на случайных q-MDP."""

    @classmethod
    def setUpClass(cls):
        rng = np.random.default_rng(77)
        cls.instances = [
            random_qmdp(dim_x, dim_a, (0.5, 0.7, 0.9)[k % 3], rng)
            for dim_x, dim_a in [(2, 2), (2, 3), (3, 2)]
            for k in range(20)
        ]

    def test_open_and_closed_gaps(self):
        for q in self.instances:
            open_report = solve_sdp_open(q)
            closed_report = solve_sdp_closed(q)
            for report in (open_report, closed_report):
                self.assertEqual(report.status, conic.OPTIMAL)
                self.assertLessEqual(abs(report.primal_value - report.dual_value),
                                     1e-6 * (1.0 + abs(report.primal_value)))

            # Ограничения (SDP-w) слабее, поэтому значение не больше
            self.assertLessEqual(closed_report.primal_value, open_report.primal_value + 1e-6)

    def test_primal_feasibility(self):
        q = self.instances[22]
        report = solve_sdp_open(q)
        np.testing.assert_allclose(op_T(q, report.sigma), (1.0 - q.beta) * q.rho0, atol=1e-6)
        report_w = solve_sdp_closed(q)
        np.testing.assert_allclose(op_Tw(q, report_w.sigma), (1.0 - q.beta) * np.diag(np.diag(q.rho0)), atol=1e-6)

    def test_dual_value_is_xi_pairing(self):
        q = self.instances[0]
        report = solve_sdp_open(q)
        pairing = (1.0 - q.beta) * float(np.vdot(report.xi, q.rho0).real)
        self.assertAlmostEqual(pairing, report.dual_value, delta=1e-8)

    def test_unit_cost_has_unit_value(self):
        """При c = Id любая допустимая sigma имеет единичный след."""
        for q in self.instances[::10]:
            unit = dataclasses.replace(q, cost=np.eye(q.dim_xa))
            for report in (solve_sdp_open(unit), solve_sdp_closed(unit)):
                self.assertEqual(report.status, conic.OPTIMAL)
                self.assertAlmostEqual(report.primal_value, 1.0, delta=1e-7)
                self.assertAlmostEqual(report.dual_value, 1.0, delta=1e-7)

    def test_problem_shapes(self):
        q = self.instances[22]
        self.assertEqual(build_sdp_open(q).num_constraints, len(hermitian_basis(q.dim_x)))
        self.assertEqual(build_sdp_closed(q).num_constraints, q.dim_x)


class TestLowerBound(unittest.TestCase):
    """SDP-значения не превосходят стоимости допустимых политик."""

    def test_rollouts_above_sdp_values(self):
        rng = np.random.default_rng(404)
        for dim_x, dim_a, beta in [(2, 2, 0.5), (2, 3, 0.9)]:
            q = random_qmdp(dim_x, dim_a, beta, rng)
            open_value = solve_sdp_open(q).primal_value
            closed_value = solve_sdp_closed(q).primal_value
            for _ in range(50):
                trace = rollout(q, OpenLoopPolicy.stationary(random_density(dim_a, rng)))
                self.assertGreaterEqual(trace.normalized_cost + trace.cost_tail_bound, open_value - 1e-6)

                trace = rollout(q, random_csp_policy(dim_x, dim_a, rng))
                self.assertGreaterEqual(trace.normalized_cost + trace.cost_tail_bound, closed_value - 1e-6)


class TestCspSubproblem(unittest.TestCase):
    """Линейная задача по спектраэдру CSP-матриц Чоя."""

    def test_diagonal_problem_decouples(self):
        """При диагональных rho и g минимум равен sum_x rho_xx min_a g(x, a)."""
        g_diag = np.array([3.0, 1.0, 2.0, -1.0, 0.5, 4.0])
        rho = np.diag([0.25, 0.75]).astype(complex)
        result = min_over_csp_policies(2, 3, rho, np.diag(g_diag))
        self.assertEqual(result.solution.status, conic.OPTIMAL)
        self.assertAlmostEqual(result.value, 0.25 * 1.0 + 0.75 * -1.0, delta=1e-6)
        self.assertTrue(csp_membership(result.policy.choi, tol=1e-7).passed)

    def test_shape_check(self):
        with self.assertRaises(DimensionMismatchError):
            min_over_csp_policies(2, 2, np.eye(2) / 2, np.eye(3))


if __name__ == "__main__":
    unittest.main()
