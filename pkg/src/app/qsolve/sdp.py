"""
Полуопределенные задачи q-MDP: (SDP)/(SDP†) для открытых политик,
(SDP-w)/(SDP-w†) для политик, сохраняющих классические состояния,
и подзадача минимизации линейной функции по CSP-каналам.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import conic
from ..channel import CspPolicyChannel, choi_objective_operator, csp_expand, csp_support_isometry
from ..errors import DimensionMismatchError
from ..herm import Matrix, basis_projector, hermitian_basis, hs_inner, tensor
from ..utils import setup_logger
from .instance import QmdpInstance, SolveReport, op_T_adj, op_Tw_adj

# Настройка логирования
logger = setup_logger(__name__)


def build_sdp_open(q: QmdpInstance) -> conic.SdpProblem:
    """
    (SDP): min <c, sigma> при T(sigma) = (1 - beta) rho0, sigma ⪰ 0.

    Эрмитово равенство записывается как |X|^2 вещественных функционалов
    <B_k, T(sigma)> = <T^dagger(B_k), sigma> по ортонормированному
    эрмитову базису B_k.
    """

    constraints = []
    for b_k in hermitian_basis(q.dim_x):
        constraints.append((op_T_adj(q, b_k), (1.0 - q.beta) * hs_inner(b_k, q.rho0)))
    return conic.SdpProblem(dim=q.dim_xa, objective=q.cost, constraints=tuple(constraints))


def _report_from_solution(solution: conic.SdpSolution, xi: Matrix, kind: str) -> SolveReport:
    if solution.status == conic.INFEASIBLE:
        logger.error(f"{kind}: задача недопустима, что невозможно для корректного экземпляра")
    return SolveReport(
        primal_value=solution.primal_obj,
        dual_value=solution.dual_obj,
        status=solution.status,
        sigma=solution.x,
        xi=xi,
        details=solution.to_dict(),
    )


def solve_sdp_open(q: QmdpInstance, tol: Optional[float] = None) -> SolveReport:
    """Решает (SDP) и восстанавливает двойственное xi = sum_k y_k B_k."""

    solution = conic.solve(build_sdp_open(q), tol=tol)
    xi = np.einsum("k,kij->ij", solution.y, hermitian_basis(q.dim_x))
    xi = (xi + xi.conj().T) / 2
    return _report_from_solution(solution, xi, "SDP")


def build_sdp_closed(q: QmdpInstance) -> conic.SdpProblem:
    """
    (SDP-w): min <c, sigma> при T_w(sigma) = (1 - beta) N_qc(rho0), sigma ⪰ 0.

    Область значений T_w диагональна, поэтому ограничений ровно |X|.
    """

    constraints = []
    for x in range(q.dim_x):
        e_xx = basis_projector(q.dim_x, x)
        constraints.append((op_Tw_adj(q, e_xx), (1.0 - q.beta) * float(q.rho0[x, x].real)))
    return conic.SdpProblem(dim=q.dim_xa, objective=q.cost, constraints=tuple(constraints))


def solve_sdp_closed(q: QmdpInstance, tol: Optional[float] = None) -> SolveReport:
    """Решает (SDP-w); двойственное xi диагонально."""

    solution = conic.solve(build_sdp_closed(q), tol=tol)
    xi = np.diag(solution.y).astype(np.complex128)
    return _report_from_solution(solution, xi, "SDP-w")


@dataclass
class CspMinimum:
    """Минимум линейной функции по CSP-каналам."""
    value: float
    policy: Optional[CspPolicyChannel]
    solution: conic.SdpSolution


def build_csp_problem(dim_x: int, dim_a: int, rho, g) -> conic.SdpProblem:
    """
    min <g, Lambda(C, rho)> по CSP-спектраэдру.

    Переменная - сжатая матрица Z на H_X ⊗ H_A (C = P Z P^T), ограничения
    Tr(Z_xx) = 1 для каждого x.
    """

    rho = np.asarray(rho, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    if rho.shape != (dim_x, dim_x) or g.shape != (dim_x * dim_a, dim_x * dim_a):
        raise DimensionMismatchError(f"rho {rho.shape} или g {g.shape} не согласованы с |X|={dim_x}, |A|={dim_a}")

    p = csp_support_isometry(dim_x, dim_a)
    objective = p.T @ choi_objective_operator(rho, g) @ p
    constraints = tuple(
        (tensor(basis_projector(dim_x, x), np.eye(dim_a)), 1.0) for x in range(dim_x)
    )
    return conic.SdpProblem(dim=dim_x * dim_a, objective=objective, constraints=constraints)


def policy_from_compressed(z, dim_x: int, dim_a: int) -> CspPolicyChannel:
    """CSP-канал по сжатой матрице Z с точной нормировкой Tr(Z_xx) = 1."""

    z = np.asarray(z, dtype=np.complex128)
    z = (z + z.conj().T) / 2
    scale = np.empty(dim_x * dim_a)
    for x in range(dim_x):
        block = z[x * dim_a:(x + 1) * dim_a, x * dim_a:(x + 1) * dim_a]
        scale[x * dim_a:(x + 1) * dim_a] = 1.0 / np.sqrt(max(float(np.trace(block).real), 1e-300))
    z = scale[:, None] * z * scale[None, :]
    return CspPolicyChannel.from_matrix(csp_expand(z, dim_x, dim_a), dim_x, dim_a)


def min_over_csp_policies(dim_x: int, dim_a: int, rho, g, tol: Optional[float] = None) -> CspMinimum:
    """
    Минимизирует <g, gamma(rho)> по gamma из C_w.

    Args:
        dim_x: Размерность H_X.
        dim_a: Размерность H_A.
        rho: Состояние на H_X.
        g: Эрмитов оператор на H_X ⊗ H_A.
        tol: Допуск решателя.
    """

    solution = conic.solve(build_csp_problem(dim_x, dim_a, rho, g), tol=tol)
    policy = None
    if solution.status in (conic.OPTIMAL, conic.MAX_ITER):
        policy = policy_from_compressed(solution.x, dim_x, dim_a)
    return CspMinimum(value=solution.primal_obj, policy=policy, solution=solution)
