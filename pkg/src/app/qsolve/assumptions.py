"""
Проверка допущений о двойственных решениях (открытые и CSP-политики).

Результат трехзначный: refuted - найдено нарушение (надежно),
certified - выполнено достаточное условие через ядро множителей
Шмидта, unknown - иначе.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..channel import nqc
from ..herm import Matrix, basis_projector, hs_inner, min_eig, operator_schmidt
from ..random_models import make_rng, random_density
from ..utils import setup_logger
from .instance import QmdpInstance, op_T_adj, op_Tw_adj
from .sdp import min_over_csp_policies
from .value import min_over_actions

# Настройка логирования
logger = setup_logger(__name__)

CERTIFIED = "certified"
REFUTED = "refuted"
UNKNOWN = "unknown"

KERNEL_TOL = 1e-8


@dataclass
class AssumptionReport:
    """Итог проверки допущения для заданного xi."""
    status: str
    dual_margin: float
    probe_residuals: List[float] = field(default_factory=list)
    kernel_residual: Optional[float] = None
    schmidt_rank: int = 0
    reason: str = ""

    @property
    def worst_residual(self) -> float:
        return max(self.probe_residuals, default=0.0)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "dual_margin": self.dual_margin,
            "worst_probe_residual": self.worst_residual,
            "probe_residuals": list(self.probe_residuals),
            "kernel_residual": self.kernel_residual,
            "schmidt_rank": self.schmidt_rank,
            "reason": self.reason,
        }


def default_probes(dim_x: int, count: int, seed=None) -> List[Matrix]:
    """Классические базисные состояния, Id/|X| и случайные операторы плотности."""
    rng = make_rng(seed)
    probes = [basis_projector(dim_x, x) for x in range(dim_x)]
    probes.append(np.eye(dim_x, dtype=np.complex128) / dim_x)
    while len(probes) < count:
        probes.append(random_density(dim_x, rng, rank=1 if len(probes) % 2 == 0 else None))
    return probes


def schmidt_kernel_residual(m, dim_x: int, dim_a: int) -> Tuple[float, int]:
    """
    min по единичным psi величины ||M (Id ⊗ psi)||: наименьшее сингулярное
    число стопки lambda_k E_A^k из разложения Шмидта M.

    Returns:
        (невязка, ранг Шмидта); при M = 0 невязка равна 0.
    """

    decomposition = operator_schmidt(m, dim_x, dim_a)
    if decomposition.rank == 0:
        return 0.0, 0
    stacked = np.vstack([w * e_a for w, e_a in zip(decomposition.weights, decomposition.right)])
    sigma = np.linalg.svd(stacked, compute_uv=False)
    return float(sigma[-1]), decomposition.rank


def _block_kernel_residual(m, dim_x: int, dim_a: int) -> float:
    """max_x lambda_min(M_xx): для M ⪰ 0 ноль означает M (|x> ⊗ psi_x) = 0."""
    m4 = np.asarray(m).reshape(dim_x, dim_a, dim_x, dim_a)
    return max(min_eig(m4[x, :, x, :]) for x in range(dim_x))


def check_assumption1(q: QmdpInstance, xi, probe_net: Sequence[Matrix], tol: float = 1e-8,
                      kernel_tol: float = KERNEL_TOL) -> AssumptionReport:
    """
    Допущение для открытых политик при данном xi.

    (a) c - T^dagger(xi) ⪰ -tol;
    (b) min_pi <c + beta N^dagger(xi), rho ⊗ pi> = <xi, rho> на пробах;
    сертификат: пересечение ядер множителей E_A^k разложения Шмидта
    M = c - T^dagger(xi) непусто.
    """

    m = q.cost - op_T_adj(q, xi)
    m = (m + m.conj().T) / 2
    margin = min_eig(m)
    if margin < -tol:
        return AssumptionReport(status=REFUTED, dual_margin=margin, reason="c - T^dagger(xi) не PSD")

    residuals = [abs(min_over_actions(q, rho, xi).value - hs_inner(xi, rho)) for rho in probe_net]
    if residuals and max(residuals) > tol:
        worst = int(np.argmax(residuals))
        return AssumptionReport(status=REFUTED, dual_margin=margin, probe_residuals=residuals,
                                reason=f"нарушение на пробе {worst}: {residuals[worst]:.3e}")

    kernel, rank = schmidt_kernel_residual(m, q.dim_x, q.dim_a)
    status = CERTIFIED if kernel <= kernel_tol else UNKNOWN
    logger.info(f"Допущение (открытые политики): {status}, ядро {kernel:.2e}, ранг Шмидта {rank}")
    return AssumptionReport(status=status, dual_margin=margin, probe_residuals=residuals,
                            kernel_residual=kernel, schmidt_rank=rank,
                            reason="" if status == CERTIFIED else "достаточное условие не выполнено")


def check_assumption2(q: QmdpInstance, xi, probe_net: Sequence[Matrix], tol: float = 1e-8,
                      kernel_tol: float = KERNEL_TOL, solver_tol: Optional[float] = None) -> AssumptionReport:
    """
    Допущение для CSP-политик при данном xi.

    (a) c - T_w^dagger(xi) ⪰ -tol;
    (b) min по C_w <c + beta N^dagger(N_qc(xi)), Lambda(C, rho)> = <N_qc(xi), rho>
    на пробах (SDP по CSP-спектраэдру);
    сертификат: ядро множителей Шмидта M_w (C_o ⊂ C_w) или ненулевое ядро
    каждого диагонального блока M_w на |x> ⊗ H_A.
    """

    xi_qc = nqc(xi)
    m = q.cost - op_Tw_adj(q, xi)
    m = (m + m.conj().T) / 2
    margin = min_eig(m)
    if margin < -tol:
        return AssumptionReport(status=REFUTED, dual_margin=margin, reason="c - T_w^dagger(xi) не PSD")

    g = q.cost + q.beta * q.channel.adjoint(xi_qc)
    residuals = []
    for rho in probe_net:
        result = min_over_csp_policies(q.dim_x, q.dim_a, rho, g, tol=solver_tol)
        residuals.append(abs(result.value - hs_inner(xi_qc, rho)))
    if residuals and max(residuals) > tol:
        worst = int(np.argmax(residuals))
        return AssumptionReport(status=REFUTED, dual_margin=margin, probe_residuals=residuals,
                                reason=f"нарушение на пробе {worst}: {residuals[worst]:.3e}")

    kernel, rank = schmidt_kernel_residual(m, q.dim_x, q.dim_a)
    kernel = min(kernel, _block_kernel_residual(m, q.dim_x, q.dim_a))
    status = CERTIFIED if kernel <= kernel_tol else UNKNOWN
    logger.info(f"Допущение (CSP-политики): {status}, ядро {kernel:.2e}, ранг Шмидта {rank}")
    return AssumptionReport(status=status, dual_margin=margin, probe_residuals=residuals,
                            kernel_residual=kernel, schmidt_rank=rank,
                            reason="" if status == CERTIFIED else "достаточное условие не выполнено")
