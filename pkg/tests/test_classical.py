"""
Тесты для модуля классических MDP.
"""

import json
import os
import sys
import unittest
from pathlib import Path

import numpy as np

# Добавляем родительскую директорию в sys.path для импорта модулей приложения
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.app.channel import classical_policy_channel
from src.app.classical import (
    ClassicalMdp,
    OccupancyMeasure,
    StationaryKernel,
    bellman_operator_d,
    disintegrate,
    dmdp_step,
    embed_to_qmdp,
    evaluate_policy,
    lp_dual,
    lp_dual_residual,
    occupancy_lp,
    policy_occupancy,
    value_iteration,
)
from src.app.errors import InvariantViolationError
from src.app.herm import basis_projector
from src.app.qsolve.occupation import evaluate_stationary
from src.app.random_models import random_classical_mdp


def load_fixture_mdp():
    """Классический MDP 2x2 из tests/fixtures_classical_mdp.json."""
    fixtures_path = Path(__file__).parent / "fixtures_classical_mdp.json"
    with open(fixtures_path, "r", encoding="utf-8") as f:
        data = json.load(f)
    mdp = ClassicalMdp(nx=data["nx"], na=data["na"], p=np.array(data["p"]), c=np.array(data["c"]), beta=data["beta"])
    return mdp, np.array(data["mu0"])


class TestValueIteration(unittest.TestCase):
    """Итерация по ценности и оценка политик."""

    def setUp(self):
        self.mdp, self.mu0 = load_fixture_mdp()

    def test_fixed_point(self):
        result = value_iteration(self.mdp, tol=1e-10)
        lv, _ = bellman_operator_d(self.mdp, result.v)
        self.assertLess(np.max(np.abs(lv - result.v)), 1e-9)

    def test_greedy_policy_value(self):
        """Ценность жадной политики совпадает с v*."""
        result = value_iteration(self.mdp, tol=1e-10)
        kernel = StationaryKernel.deterministic(result.policy, self.mdp.na)
        np.testing.assert_allclose(evaluate_policy(self.mdp, kernel), result.v, atol=1e-8)

    def test_zero_discount(self):
        """При beta = 0 ценность равна минимальной мгновенной стоимости."""
        mdp = ClassicalMdp(nx=2, na=2, p=self.mdp.p, c=self.mdp.c, beta=0.0)
        result = value_iteration(mdp)
        np.testing.assert_allclose(result.v, [0.5, 0.0])
        self.assertEqual(result.iterations, 1)

    def test_invalid_transitions(self):
        p = np.array(self.mdp.p)
        p[0, 0, 0] += 0.1
        with self.assertRaises(InvariantViolationError) as ctx:
            ClassicalMdp(nx=2, na=2, p=p, c=self.mdp.c, beta=0.9)
        self.assertEqual(ctx.exception.invariant, "stochasticity")

    def test_discount_range(self):
        with self.assertRaises(InvariantViolationError) as ctx:
            ClassicalMdp(nx=2, na=2, p=self.mdp.p, c=self.mdp.c, beta=1.0)
        self.assertEqual(ctx.exception.invariant, "discount_range")


class TestOccupancy(unittest.TestCase):
    """Меры занятости и ЛП d-MDP."""

    def setUp(self):
        self.mdp, self.mu0 = load_fixture_mdp()
        self.v_star = value_iteration(self.mdp, tol=1e-11).v

    def test_policy_occupancy_balance(self):
        """nu(y, A) - beta P(nu)(y) = (1 - beta) mu0(y)."""
        occupancy = policy_occupancy(self.mdp, StationaryKernel.uniform(2, 2), self.mu0)
        balance = occupancy.state_marginal - self.mdp.beta * dmdp_step(occupancy.nu, self.mdp)
        np.testing.assert_allclose(balance, (1.0 - self.mdp.beta) * self.mu0, atol=1e-12)

    def test_lp_value_matches_value_iteration(self):
        nu, value = occupancy_lp(self.mdp, self.mu0)
        expected = (1.0 - self.mdp.beta) * float(self.mu0 @ self.v_star)
        self.assertAlmostEqual(value, expected, delta=1e-6)
        self.assertAlmostEqual(float(nu.nu.sum()), 1.0, places=10)

    def test_lp_dual_is_optimal_value(self):
        xi, dual_value = lp_dual(self.mdp, self.mu0)
        np.testing.assert_allclose(xi, self.v_star, atol=1e-5)
        self.assertLess(lp_dual_residual(self.mdp, xi), 1e-6)
        self.assertAlmostEqual(dual_value, (1.0 - self.mdp.beta) * float(self.mu0 @ self.v_star), delta=1e-6)

    def test_disintegration_recovers_policy(self):
        pi = np.array([[0.25, 0.75], [1.0, 0.0]])
        occupancy = policy_occupancy(self.mdp, pi, self.mu0)
        np.testing.assert_allclose(disintegrate(occupancy).pi, pi, atol=1e-12)

    def test_disintegration_of_unvisited_state(self):
        kernel = disintegrate(OccupancyMeasure(nu=np.array([[0.5, 0.5], [0.0, 0.0]])))
        np.testing.assert_allclose(kernel.pi[1], [0.5, 0.5])

    def test_occupancy_mass_checked(self):
        with self.assertRaises(InvariantViolationError) as ctx:
            OccupancyMeasure(nu=np.array([[0.5, 0.2], [0.0, 0.0]]))
        self.assertEqual(ctx.exception.invariant, "unit_mass")


class TestEmbedding(unittest.TestCase):
    """Вложение классического MDP в q-MDP."""

    def test_embedded_policy_value(self):
        """Классическая политика в вложенной модели имеет ту же стоимость."""
        mdp, mu0 = load_fixture_mdp()
        q = embed_to_qmdp(mdp, mu0)
        self.assertEqual((q.dim_x, q.dim_a), (2, 2))
        np.testing.assert_allclose(q.rho0, np.diag(mu0))

        pi = np.array([[0.25, 0.75], [1.0, 0.0]])
        expected = evaluate_policy(mdp, pi)
        for x in range(2):
            value = evaluate_stationary(q.with_rho0(basis_projector(2, x)), classical_policy_channel(pi))
            self.assertAlmostEqual(value / (1.0 - mdp.beta), expected[x], places=8)

    def test_random_models_embed(self):
        rng = np.random.default_rng(31)
        for k in range(20):
            nx, na = ((2, 2), (3, 2), (2, 3))[k % 3]
            mdp = random_classical_mdp(nx, na, (0.5, 0.9)[k % 2], rng)
            q = embed_to_qmdp(mdp)
            np.testing.assert_allclose(np.trace(q.rho0).real, 1.0)
            self.assertEqual(q.cost.shape, (nx * na, nx * na))

            pi = rng.dirichlet(np.ones(na), size=nx)
            expected = evaluate_policy(mdp, pi)
            x = k % nx
            value = evaluate_stationary(q.with_rho0(basis_projector(nx, x)), classical_policy_channel(pi))
            self.assertAlmostEqual(value / (1.0 - mdp.beta), expected[x], places=7)


if __name__ == "__main__":
    unittest.main()
