"""
Тесты для модуля квантовых каналов.
"""

import os
import sys
import unittest

import numpy as np

# Добавляем родительскую директорию в sys.path для импорта модулей приложения
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.app.channel import (
    ChoiMatrix,
    CspPolicyChannel,
    KrausChannel,
    adjoint_apply,
    appending_channel,
    appending_structure,
    apply_choi,
    apply_kraus,
    choi_adjoint_apply,
    choi_to_kraus,
    classical_channel_embed,
    classical_policy_channel,
    csp_compress,
    csp_expand,
    csp_membership,
    kraus_to_choi,
    nqc,
    verify_cptp,
)
from src.app.errors import InvariantViolationError
from src.app.herm import hs_inner, partial_trace_A, tensor
from src.app.random_models import random_channel, random_csp_policy, random_density, random_hermitian


class TestCptpVerification(unittest.TestCase):
    """Проверка полной положительности и сохранения следа."""

    def setUp(self):
        self.rng = np.random.default_rng(2024)

    def test_random_channels_pass(self):
        """Все сгенерированные каналы проходят проверку."""
        for _ in range(100):
            in_dim, out_dim = self.rng.integers(2, 5, size=2)
            channel = random_channel(int(in_dim), int(out_dim), self.rng)
            self.assertTrue(verify_cptp(channel).passed)
            self.assertTrue(verify_cptp(kraus_to_choi(channel)).passed)

    def test_perturbed_channels_fail(self):
        """Искажение сохранения следа на 1e-4 обнаруживается для каждого канала."""
        for _ in range(100):
            channel = random_channel(4, 2, self.rng)
            ops = list(channel.kraus)
            ops[0] = ops[0] * (1.0 + 1e-4)
            report = verify_cptp(KrausChannel.unchecked(ops))
            self.assertFalse(report.passed)
            self.assertGreater(report.tp_residual, 1e-8)

    def test_negative_choi_fails(self):
        """Сдвиг матрицы Чоя на -1e-4 * Id нарушает положительность."""
        choi = kraus_to_choi(random_channel(2, 2, self.rng))
        shifted = ChoiMatrix.unchecked(choi.matrix - 1e-4 * np.eye(4), 2, 2)
        report = verify_cptp(shifted)
        self.assertFalse(report.passed)
        self.assertLess(report.psd_margin, -1e-8)

    def test_incomplete_kraus_rejected(self):
        """Невязка полноты 0.02 отвергается с инвариантом trace_preservation."""
        k = np.sqrt(0.99) * np.eye(2)
        with self.assertRaises(InvariantViolationError) as ctx:
            KrausChannel.from_operators([k])
        self.assertEqual(ctx.exception.invariant, "trace_preservation")
        self.assertAlmostEqual(ctx.exception.residual, 0.01 * np.sqrt(2), places=10)


class TestRepresentations(unittest.TestCase):
    """Согласованность представлений Крауса и Чоя."""

    def setUp(self):
        self.rng = np.random.default_rng(17)
        self.channel = random_channel(4, 2, self.rng)

    def test_choi_and_kraus_agree(self):
        rho = random_density(4, self.rng)
        choi = kraus_to_choi(self.channel)
        np.testing.assert_allclose(apply_choi(choi, rho), apply_kraus(self.channel, rho), atol=1e-12)

        recovered = choi_to_kraus(choi)
        np.testing.assert_allclose(apply_kraus(recovered, rho), apply_kraus(self.channel, rho), atol=1e-10)

    def test_adjoint_identity(self):
        """<xi, N(rho)> = <N^dagger(xi), rho>."""
        for _ in range(20):
            rho = random_hermitian(4, self.rng)
            xi = random_hermitian(2, self.rng)
            lhs = hs_inner(xi, apply_kraus(self.channel, rho))
            rhs = hs_inner(adjoint_apply(self.channel, xi), rho)
            self.assertAlmostEqual(lhs, rhs, places=10)

    def test_choi_adjoint_identity(self):
        choi = kraus_to_choi(self.channel)
        rho = random_hermitian(4, self.rng)
        m = random_hermitian(2, self.rng)
        self.assertAlmostEqual(
            hs_inner(m, apply_choi(choi, rho)),
            hs_inner(choi_adjoint_apply(choi, m), rho),
            places=10,
        )

    def test_identity_channel_choi_is_entangled_projector(self):
        choi = kraus_to_choi(KrausChannel.from_operators([np.eye(2)]))
        psi = np.array([1.0, 0.0, 0.0, 1.0])
        np.testing.assert_allclose(choi.matrix, np.outer(psi, psi), atol=1e-14)

    def test_dephasing(self):
        rho = random_density(3, self.rng)
        np.testing.assert_allclose(nqc(rho), np.diag(np.diag(rho)))


class TestClassicalEmbedding(unittest.TestCase):
    """Вложение классических каналов."""

    def test_diagonal_action(self):
        """На диагональных входах канал действует как стохастическая матрица."""
        w = np.array([[0.5, 0.25, 1.0], [0.5, 0.75, 0.0]])
        channel = classical_channel_embed(w)
        p = np.array([0.25, 0.25, 0.5])
        out = apply_kraus(channel, np.diag(p))
        np.testing.assert_allclose(out, np.diag(w @ p), atol=1e-12)

    def test_permutation_gives_unitary(self):
        w = np.array([[0.0, 1.0], [1.0, 0.0]])
        channel = classical_channel_embed(w)
        self.assertEqual(len(channel.kraus), 1)
        np.testing.assert_allclose(channel.kraus[0], w)

    def test_non_stochastic_rejected(self):
        with self.assertRaises(InvariantViolationError) as ctx:
            classical_channel_embed(np.array([[0.5, 0.5], [0.4, 0.5]]))
        self.assertEqual(ctx.exception.invariant, "stochasticity")


class TestAppendingAndCsp(unittest.TestCase):
    """Присоединяющие каналы и политики, сохраняющие классические состояния."""

    def setUp(self):
        self.rng = np.random.default_rng(23)

    def test_appending_structure_recovers_state(self):
        pi = random_density(2, self.rng)
        channel = appending_channel(pi, 3)
        rho = random_density(3, self.rng)
        np.testing.assert_allclose(apply_kraus(channel, rho), tensor(rho, pi), atol=1e-12)

        passed, xi = appending_structure(channel, 3, 2)
        self.assertTrue(passed)
        np.testing.assert_allclose(xi, pi, atol=1e-12)

    def test_random_channel_is_not_appending(self):
        channel = random_channel(2, 4, self.rng)
        passed, _ = appending_structure(channel, 2, 2)
        self.assertFalse(passed)

    def test_classical_policy_is_csp(self):
        policy = classical_policy_channel(np.array([[1.0, 0.0], [0.25, 0.75]]))
        self.assertTrue(csp_membership(policy.choi).passed)
        out = policy.apply(np.diag([0.0, 1.0]))
        np.testing.assert_allclose(np.diag(out).real, [0.0, 0.0, 0.25, 0.75], atol=1e-12)

    def test_random_csp_policy_and_compression(self):
        for _ in range(10):
            policy = random_csp_policy(2, 3, self.rng)
            self.assertTrue(csp_membership(policy.choi).passed)
            z = csp_compress(policy.choi, 3)
            np.testing.assert_allclose(csp_expand(z, 2, 3), policy.choi.matrix, atol=1e-12)

    def test_appending_channel_is_csp(self):
        for dim_x, dim_a in ((2, 2), (3, 2), (2, 3)):
            choi = kraus_to_choi(appending_channel(random_density(dim_a, self.rng), dim_x))
            report = csp_membership(choi, dim_a=dim_a)
            self.assertTrue(report.passed)
            self.assertLess(report.residual, 1e-10)

    def test_csp_policy_preserves_dephased_state(self):
        """nqc(Tr_A gamma(rho)) = nqc(rho) для любой CSP-политики."""
        for _ in range(10):
            policy = random_csp_policy(3, 2, self.rng)
            rho = random_density(3, self.rng)
            marginal = partial_trace_A(apply_choi(policy.choi, rho), 3, 2)
            np.testing.assert_allclose(nqc(marginal), nqc(rho), atol=1e-8)

    def test_generic_channel_is_not_csp(self):
        choi = kraus_to_choi(random_channel(2, 4, self.rng))
        with self.assertRaises(InvariantViolationError) as ctx:
            CspPolicyChannel(choi=choi, dim_x=2, dim_a=2)
        self.assertEqual(ctx.exception.invariant, "csp_membership")


if __name__ == "__main__":
    unittest.main()
