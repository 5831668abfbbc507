"""
Аффинные неподвижные точки политик, операторы ценности и прогон
траекторий с оценкой хвоста усечения.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..channel import CspPolicyChannel, adjoint_apply, apply_choi, apply_kraus, choi_adjoint_apply
from ..errors import DimensionMismatchError, NumericalDegeneracyError
from ..herm import Matrix, density, from_real_vector, hs_inner, partial_trace_A, superoperator_matrix, tensor, to_real_vector
from ..utils import setup_logger
from .instance import OpenLoopPolicy, Policy, QmdpInstance

# Настройка логирования
logger = setup_logger(__name__)

CONDITION_WARN = 1e12
TAIL_THRESHOLD = 1e-9
FIXED_POINT_RESIDUAL = 1e-10


def solve_affine_fixed_point(linear_map: Callable[[Matrix], Matrix], rhs, dim: int, beta: float) -> Matrix:
    """
    Решает z = rhs + beta * L(z) относительно эрмитовой z.

    Система (I - beta L) v = rhs записывается в вещественных координатах
    эрмитова базиса и решается напрямую.
    """

    l_mat = superoperator_matrix(linear_map, dim, dim)
    system = np.eye(dim * dim) - beta * l_mat
    cond = float(np.linalg.cond(system))
    if not np.isfinite(cond):
        raise NumericalDegeneracyError("Система неподвижной точки вырождена")
    if cond > CONDITION_WARN:
        logger.warning(f"Плохая обусловленность системы неподвижной точки: cond={cond:.2e}")

    try:
        v = np.linalg.solve(system, to_real_vector(rhs, dim))
    except np.linalg.LinAlgError as e:
        raise NumericalDegeneracyError(f"Система неподвижной точки вырождена: {e}") from e

    z = from_real_vector(v, dim)
    residual = float(np.linalg.norm(z - np.asarray(rhs) - beta * linear_map(z)))
    logger.debug(f"Неподвижная точка: dim={dim}, cond={cond:.2e}, невязка={residual:.2e}")
    if residual > FIXED_POINT_RESIDUAL * max(1.0, float(np.linalg.norm(z))):
        raise NumericalDegeneracyError(
            f"Невязка неподвижной точки {residual:.2e} превышает {FIXED_POINT_RESIDUAL:.0e} (cond={cond:.2e})"
        )
    return z


def _action_map(q: QmdpInstance, policy: Policy) -> Callable[[Matrix], Matrix]:
    """Стационарное отображение gamma: H_X -> H_X ⊗ H_A."""

    if isinstance(policy, CspPolicyChannel):
        if policy.dim_x != q.dim_x or policy.dim_a != q.dim_a:
            raise DimensionMismatchError("Политика не согласована с размерностями экземпляра")
        return lambda rho: apply_choi(policy.choi, rho)

    pi = policy.tail if isinstance(policy, OpenLoopPolicy) else density(policy)
    if pi.shape != (q.dim_a, q.dim_a):
        raise DimensionMismatchError(f"pi {pi.shape} не соответствует |A|={q.dim_a}")
    return lambda rho: tensor(rho, pi)


def _action_adjoint(q: QmdpInstance, policy: Policy) -> Callable[[Matrix], Matrix]:
    """Сопряженное к gamma: <m, gamma(rho)> = <gamma^dagger(m), rho>."""

    if isinstance(policy, CspPolicyChannel):
        return lambda m: choi_adjoint_apply(policy.choi, m)

    pi = policy.tail if isinstance(policy, OpenLoopPolicy) else density(policy)
    ident = np.eye(q.dim_x)
    return lambda m: partial_trace_A(np.asarray(m) @ tensor(ident, pi), q.dim_x, q.dim_a)


def fixed_point_state(q: QmdpInstance, pi) -> Matrix:
    """
    Стационарная занятость состояний открытой политики:
    rho* = (1 - beta) rho0 + beta N(rho* ⊗ pi).

    Args:
        q: Экземпляр q-MDP.
        pi: Оператор плотности на H_A или OpenLoopPolicy (берется хвост).
    """

    gamma = _action_map(q, pi)
    rho = solve_affine_fixed_point(
        lambda z: apply_kraus(q.channel, gamma(z)), (1.0 - q.beta) * q.rho0, q.dim_x, q.beta
    )
    return density(rho, tol_psd=1e-8, tol_trace=1e-8)


def fixed_point_state_csp(q: QmdpInstance, policy: CspPolicyChannel) -> Matrix:
    """rho* = (1 - beta) rho0 + beta N(gamma(rho*)) для CSP-политики."""

    gamma = _action_map(q, policy)
    rho = solve_affine_fixed_point(
        lambda z: apply_kraus(q.channel, gamma(z)), (1.0 - q.beta) * q.rho0, q.dim_x, q.beta
    )
    return density(rho, tol_psd=1e-8, tol_trace=1e-8)


def fixed_point_sigma(q: QmdpInstance, policy: CspPolicyChannel) -> Matrix:
    """
    Оператор занятости CSP-политики: sigma = gamma((1 - beta) rho0 + beta N(sigma)).

    Эквивалентно sigma = gamma(rho*), где rho* - неподвижная точка по
    состояниям; так система решается в размерности |X|, а не |X||A|.
    """

    sigma = apply_choi(policy.choi, fixed_point_state_csp(q, policy))
    return density(sigma, tol_psd=1e-8, tol_trace=1e-8)


def policy_value_operator(q: QmdpInstance, policy: Policy) -> Matrix:
    """
    Оператор ценности eta стационарной политики:
    eta = gamma^dagger(c) + beta gamma^dagger(N^dagger(eta)).

    Ненормированная стоимость из состояния rho равна <eta, rho>,
    нормированная - (1 - beta) <eta, rho0>.
    """

    gamma_adj = _action_adjoint(q, policy)
    return solve_affine_fixed_point(
        lambda e: gamma_adj(adjoint_apply(q.channel, e)), gamma_adj(q.cost), q.dim_x, q.beta
    )


def evaluate_stationary(q: QmdpInstance, policy: Policy) -> float:
    """Нормированная стоимость J = (1 - beta) <eta, rho0> стационарной политики."""
    return (1.0 - q.beta) * hs_inner(policy_value_operator(q, policy), q.rho0)


def default_horizon(q: QmdpInstance, threshold: float = TAIL_THRESHOLD) -> int:
    """Наименьшее T с beta^T ||c||_HS / (1 - beta) < threshold."""

    norm = q.cost_hs_norm
    if q.beta == 0.0 or norm == 0.0:
        return 1
    target = threshold * (1.0 - q.beta) / norm
    horizon = max(1, int(math.ceil(math.log(target) / math.log(q.beta))))
    while q.beta ** horizon * norm / (1.0 - q.beta) >= threshold:
        horizon += 1
    while horizon > 1 and q.beta ** (horizon - 1) * norm / (1.0 - q.beta) < threshold:
        horizon -= 1
    return horizon


@dataclass
class RolloutResult:
    """Результат прогона траектории длины horizon."""
    discounted_cost: float
    occupation: Matrix = field(repr=False)
    states: List[Matrix] = field(repr=False)
    actions: List[Matrix] = field(repr=False)
    horizon: int
    beta: float
    cost_tail_bound: float
    occupation_tail_bound: float

    @property
    def normalized_cost(self) -> float:
        """(1 - beta) * discounted_cost, в шкале значений SDP."""
        return (1.0 - self.beta) * self.discounted_cost

    def to_dict(self) -> dict:
        return {
            "discounted_cost": self.discounted_cost,
            "normalized_cost": self.normalized_cost,
            "horizon": self.horizon,
            "cost_tail_bound": self.cost_tail_bound,
            "occupation_tail_bound": self.occupation_tail_bound,
        }


def rollout(q: QmdpInstance, policy: Policy, horizon: Optional[int] = None) -> RolloutResult:
    """
    Прогоняет политику: sigma_t = gamma_t(rho_t), rho_{t+1} = N(sigma_t).

    Args:
        q: Экземпляр q-MDP.
        policy: OpenLoopPolicy (в том числе нестационарная) или CspPolicyChannel.
        horizon: Длина прогона T >= 1; по умолчанию default_horizon(q).

    Returns:
        RolloutResult со стоимостью sum_{t<T} beta^t <c, sigma_t>, оператором
        занятости (1 - beta) sum_{t<T} beta^t sigma_t и оценками хвоста.
    """

    if horizon is None:
        horizon = default_horizon(q)
    if horizon < 1:
        raise ValueError(f"Горизонт должен быть >= 1, получено {horizon}")

    if isinstance(policy, OpenLoopPolicy):
        if policy.dim_a != q.dim_a:
            raise DimensionMismatchError(f"pi размерности {policy.dim_a} не соответствует |A|={q.dim_a}")
        step = lambda t, rho: tensor(rho, policy.at(t))
    else:
        gamma = _action_map(q, policy)
        step = lambda t, rho: gamma(rho)

    rho = np.array(q.rho0, dtype=np.complex128)
    states, actions = [], []
    occupation = np.zeros((q.dim_xa, q.dim_xa), dtype=np.complex128)
    cost = 0.0
    weight = 1.0
    for t in range(horizon):
        sigma = step(t, rho)
        states.append(rho)
        actions.append(sigma)
        cost += weight * hs_inner(q.cost, sigma)
        occupation += weight * sigma
        rho = apply_kraus(q.channel, sigma)
        weight *= q.beta

    occupation *= (1.0 - q.beta)
    tail = q.beta ** horizon
    return RolloutResult(
        discounted_cost=cost,
        occupation=(occupation + occupation.conj().T) / 2,
        states=states,
        actions=actions,
        horizon=horizon,
        beta=q.beta,
        cost_tail_bound=tail * q.cost_spectral_norm / (1.0 - q.beta),
        occupation_tail_bound=2.0 * tail,
    )
