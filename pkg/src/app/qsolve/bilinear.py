"""
Стационарные оптимальные политики через билинейные программы (BIL) и
(BIL-w): состояние исключается аффинной неподвижной точкой, по
политике работает метод Франк-Вульфа, нижняя граница - из SDP.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .. import conic
from ..channel import CspPolicyChannel, apply_choi, classical_policy_channel, choi_objective_operator
from ..herm import Matrix, hs_inner, tensor
from ..random_models import make_rng, random_csp_policy, random_density
from ..settings import settings
from ..utils import setup_logger
from .instance import OpenLoopPolicy, QmdpInstance, SolveReport
from .occupation import (
    fixed_point_state,
    fixed_point_state_csp,
    policy_value_operator,
    rollout,
)
from .sdp import min_over_csp_policies, solve_sdp_closed, solve_sdp_open
from .value import action_contraction, bottom_eigenprojector

# Настройка логирования
logger = setup_logger(__name__)

STATIONARY = "stationary"
IMPROVEMENT_TOL = 1e-15


@dataclass(frozen=True)
class BilinearOptions:
    """Параметры Франк-Вульфа и сертификата."""

    max_outer: int = 100
    tol: float = 1e-7
    restarts: int = 8
    seed: int = 42
    certificate_tol: float = 1e-6
    solver_tol: Optional[float] = None

    @classmethod
    def from_settings(cls, **overrides) -> "BilinearOptions":
        section = settings.solver_config["bilinear"]
        values = {
            "max_outer": int(section["max_outer"]),
            "tol": float(section["tol"]),
            "restarts": int(section["restarts"]),
            "seed": int(settings.get("cli", "seed")),
            "certificate_tol": float(section["certificate_tol"]),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class FrankWolfeRun:
    """Итог одного запуска Франк-Вульфа."""
    point: Any = field(repr=False)
    value: float
    fw_gap: float
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list, repr=False)


def frank_wolfe(
    start,
    objective: Callable[[Any], float],
    linearize: Callable[[Any], Tuple[float, Any, float]],
    combine: Callable[[Any, Any, float], Any],
    max_outer: int,
    tol: float,
) -> FrankWolfeRun:
    """
    Метод условного градиента с точным одномерным поиском.

    Args:
        start: Допустимая начальная точка.
        objective: Значение целевой функции.
        linearize: (значение, вершина-минимизатор линейной модели, зазор Франк-Вульфа).
        combine: (x, v, t) -> (1 - t) x + t v.
        max_outer: Максимум внешних итераций.
        tol: Порог зазора Франк-Вульфа.
    """

    point = start
    value = objective(point)
    history = [value]
    gap = np.inf
    for iteration in range(1, max_outer + 1):
        value, vertex, gap = linearize(point)
        if gap <= tol:
            return FrankWolfeRun(point, value, gap, iteration, True, history)

        phi = lambda t: objective(combine(point, vertex, t))
        search = minimize_scalar(phi, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
        new_value, step = min((float(search.fun), float(search.x)), (phi(1.0), 1.0))

        if new_value >= value - IMPROVEMENT_TOL:
            logger.debug(f"Франк-Вульф: нет улучшения на итерации {iteration}, зазор {gap:.3e}")
            return FrankWolfeRun(point, value, gap, iteration, False, history)

        point = combine(point, vertex, step)
        value = new_value
        history.append(value)
        logger.debug(f"Франк-Вульф: итерация {iteration}, J={value:.12g}, зазор={gap:.3e}, шаг={step:.3e}")

    return FrankWolfeRun(point, value, gap, max_outer, False, history)


def open_loop_value(q: QmdpInstance, pi) -> float:
    """J(pi) = <c, rho(pi) ⊗ pi>, rho(pi) - неподвижная точка по состояниям."""
    return hs_inner(q.cost, tensor(fixed_point_state(q, pi), pi))


def open_loop_objective(q: QmdpInstance, pi) -> Tuple[float, Matrix]:
    """
    J(pi) и его градиент по pi.

    Градиент равен Tr_X((c + beta N^dagger(eta)) (rho ⊗ Id)), где eta -
    оператор ценности политики, то есть частичной свертке из min_over_actions
    при xi = eta.
    """

    rho = fixed_point_state(q, pi)
    eta = policy_value_operator(q, OpenLoopPolicy.stationary(pi))
    return hs_inner(q.cost, tensor(rho, pi)), action_contraction(q, rho, eta)


def closed_loop_value(q: QmdpInstance, policy: CspPolicyChannel) -> float:
    """J(C) = <c, Lambda(C, rho(C))>."""
    return hs_inner(q.cost, apply_choi(policy.choi, fixed_point_state_csp(q, policy)))


def closed_loop_objective(q: QmdpInstance, policy: CspPolicyChannel) -> Tuple[float, Matrix, Matrix, Matrix]:
    """
    J(C), градиент по матрице Чоя rho^T ⊗ lambda и пара (rho, lambda)
    для линейной подзадачи.
    """

    rho = fixed_point_state_csp(q, policy)
    eta = policy_value_operator(q, policy)
    lam = q.cost + q.beta * q.channel.adjoint(eta)
    value = hs_inner(q.cost, apply_choi(policy.choi, rho))
    return value, choi_objective_operator(rho, lam), rho, lam


def _certify(q: QmdpInstance, run: FrankWolfeRun, lower: SolveReport, options: BilinearOptions,
             policy, restart_values: List[float], kind: str) -> SolveReport:
    lower_bound = lower.dual_value
    certificate_gap = run.value - lower_bound
    if lower.status == conic.OPTIMAL and certificate_gap <= options.certificate_tol:
        status = conic.OPTIMAL
    elif run.converged:
        status = STATIONARY
    else:
        status = conic.MAX_ITER

    trace = rollout(q, policy)
    logger.info(
        f"{kind}: J={run.value:.10g}, нижняя граница {lower_bound:.10g}, "
        f"зазор сертификата {certificate_gap:.2e}, статус {status}"
    )
    return SolveReport(
        primal_value=run.value,
        dual_value=lower_bound,
        status=status,
        extracted_policy=policy,
        rollout_value=trace.normalized_cost,
        details={
            "fw_gap": float(run.fw_gap),
            "iterations": run.iterations,
            "converged": run.converged,
            "certificate_gap": float(certificate_gap),
            "lower_bound_status": lower.status,
            "restart_values": [float(v) for v in restart_values],
            "rollout": trace.to_dict(),
        },
    )


def solve_bil_open(q: QmdpInstance, options: Optional[BilinearOptions] = None) -> SolveReport:
    """
    (BIL): лучшая стационарная открытая политика pi.

    Первый запуск стартует с максимально смешанного pi, остальные - со
    случайных операторов плотности (зерно options.seed).
    """

    options = options or BilinearOptions.from_settings()
    rng = make_rng(options.seed)

    def linearize(pi):
        value, grad = open_loop_objective(q, pi)
        lam_min, vertex = bottom_eigenprojector(grad)
        return value, vertex, hs_inner(grad, pi) - lam_min

    combine = lambda pi, vertex, t: (1.0 - t) * pi + t * vertex
    objective = lambda pi: open_loop_value(q, pi)

    best, values = None, []
    for restart in range(max(1, options.restarts)):
        if restart == 0:
            start = np.eye(q.dim_a, dtype=np.complex128) / q.dim_a
        else:
            start = random_density(q.dim_a, rng)
        run = frank_wolfe(start, objective, linearize, combine, options.max_outer, options.tol)
        values.append(run.value)
        logger.info(f"BIL, запуск {restart}: J={run.value:.10g}, зазор FW={run.fw_gap:.2e}, итераций {run.iterations}")
        if best is None or run.value < best.value:
            best = run

    lower = solve_sdp_open(q, tol=options.solver_tol)
    return _certify(q, best, lower, options, OpenLoopPolicy.stationary(best.point), values, "BIL")


def solve_bil_closed(q: QmdpInstance, options: Optional[BilinearOptions] = None) -> SolveReport:
    """
    (BIL-w): лучшая стационарная CSP-политика.

    Линейная подзадача - SDP по спектраэдру CSP-матриц Чоя; первый запуск
    стартует с равномерной классической политики.
    """

    options = options or BilinearOptions.from_settings()
    rng = make_rng(options.seed)

    def linearize(policy):
        value, _, rho, lam = closed_loop_objective(q, policy)
        vertex = min_over_csp_policies(q.dim_x, q.dim_a, rho, lam, tol=options.solver_tol)
        if vertex.policy is None:
            return value, policy, 0.0
        current = hs_inner(lam, apply_choi(policy.choi, rho))
        return value, vertex.policy, current - vertex.value

    def combine(policy, vertex, t):
        matrix = (1.0 - t) * policy.choi.matrix + t * vertex.choi.matrix
        return CspPolicyChannel.from_matrix(matrix, q.dim_x, q.dim_a, tol=1e-7)

    objective = lambda policy: closed_loop_value(q, policy)

    best, values = None, []
    for restart in range(max(1, options.restarts)):
        if restart == 0:
            start = classical_policy_channel(np.full((q.dim_x, q.dim_a), 1.0 / q.dim_a))
        else:
            start = random_csp_policy(q.dim_x, q.dim_a, rng)
        run = frank_wolfe(start, objective, linearize, combine, options.max_outer, options.tol)
        values.append(run.value)
        logger.info(f"BIL-w, запуск {restart}: J={run.value:.10g}, зазор FW={run.fw_gap:.2e}, итераций {run.iterations}")
        if best is None or run.value < best.value:
            best = run

    lower = solve_sdp_closed(q, tol=options.solver_tol)
    return _certify(q, best, lower, options, best.point, values, "BIL-w")
